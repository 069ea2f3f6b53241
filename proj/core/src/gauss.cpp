#include "ipk/gauss.hpp"

#include <cmath>
#include <stdexcept>

namespace ipk::gauss {

namespace {

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

DiagGaussian::DiagGaussian(Eigen::VectorXd mean, Eigen::VectorXd var)
    : mean_(std::move(mean)), var_(std::move(var)) {
  require(mean_.size() == var_.size(), "DiagGaussian: mean/var length mismatch");
  require(mean_.size() > 0, "DiagGaussian: empty distribution");
  require(mean_.allFinite(), "DiagGaussian: non-finite mean");
  require(var_.allFinite(), "DiagGaussian: non-finite variance");
  require((var_.array() >= 0.0).all(), "DiagGaussian: negative variance");
  var_ = var_.cwiseMax(kVarianceFloor);
}

DiagGaussian DiagGaussian::standard(int dim) {
  return DiagGaussian(Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Ones(dim));
}

double kl_divergence(const DiagGaussian& g1, const DiagGaussian& g2) {
  require(g1.dim() == 2 && g2.dim() == 2,
          "kl_divergence: expects 2-dimensional (merged) distributions");
  const auto& v1 = g1.var();
  const auto& v2 = g2.var();
  double kl = 0.0;
  for (int i = 0; i < 2; ++i) {
    const double dm = g2.mean()[i] - g1.mean()[i];
    kl += 0.5 * (std::log(v2[i] / v1[i]) - 1.0 + v1[i] / v2[i] + dm * dm / v2[i]);
  }
  if (!std::isfinite(kl)) throw std::invalid_argument("kl_divergence: non-finite result");
  return kl;
}

DiagGaussian kalman_fuse(const DiagGaussian& g_bas, const DiagGaussian& g_gau) {
  require(g_bas.dim() == g_gau.dim(), "kalman_fuse: dimension mismatch");
  const auto& vb = g_bas.var().array();
  const auto& vg = g_gau.var().array();
  Eigen::VectorXd mean =
      ((vb * g_gau.mean().array() + vg * g_bas.mean().array()) / (vb + vg)).matrix();
  Eigen::VectorXd var = (vb * vg / (vb + vg)).matrix();
  return DiagGaussian(std::move(mean), std::move(var));
}

DiagGaussian weighted_fuse(const DiagGaussian& g_bas, const DiagGaussian& g_gau,
                           double zeta_bas) {
  require(g_bas.dim() == g_gau.dim(), "weighted_fuse: dimension mismatch");
  require(zeta_bas >= 0.0 && zeta_bas <= 1.0, "weighted_fuse: zeta_bas outside [0, 1]");
  // Analytic limits; the formula below would divide by zero.
  if (zeta_bas == 1.0) return g_bas;
  if (zeta_bas == 0.0) return g_gau;
  const double zr = 1.0 - zeta_bas;
  const auto& vb = g_bas.var().array();
  const auto& vg = g_gau.var().array();
  Eigen::VectorXd mean = ((zr * vb * g_gau.mean().array() + zeta_bas * vg * g_bas.mean().array()) /
                          (zr * vb + zeta_bas * vg))
                             .matrix();
  Eigen::VectorXd var = (1.0 / (zeta_bas / vb + zr / vg)).matrix();
  return DiagGaussian(std::move(mean), std::move(var));
}

DiagGaussian merge_motor_pairs(const DiagGaussian& g4) {
  require(g4.dim() == 4, "merge_motor_pairs: expects a 4-motor distribution");
  const auto& m = g4.mean();
  const auto& v = g4.var();
  Eigen::Vector2d mean;
  Eigen::Vector2d var;
  // w axis: motor 4 acts in +w, motor 2 in -w; l axis: motor 1 in +l, motor 3 in -l.
  mean[0] = m[3] - m[1];
  mean[1] = m[0] - m[2];
  var[0] = 0.5 * (v[3] + v[1]);
  var[1] = 0.5 * (v[0] + v[2]);
  return DiagGaussian(mean, var);
}

}  // namespace ipk::gauss
