#pragma once

#include <Eigen/Core>

namespace ipk::gauss {

/// Applied to every variance on construction so log-determinants and
/// precision terms stay finite.
inline constexpr double kVarianceFloor = 1e-8;

/// Diagonal multivariate Gaussian over an action space. Variances are stored
/// directly (not standard deviations) so fusion and divergence formulas read
/// off the definition.
class DiagGaussian {
 public:
  DiagGaussian(Eigen::VectorXd mean, Eigen::VectorXd var);

  static DiagGaussian standard(int dim);

  int dim() const { return static_cast<int>(mean_.size()); }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::VectorXd& var() const { return var_; }

 private:
  Eigen::VectorXd mean_;
  Eigen::VectorXd var_;
};

/// KL(g1 || g2) for 2-dimensional diagonal Gaussians (post motor-pair merge).
double kl_divergence(const DiagGaussian& g1, const DiagGaussian& g2);

/// Precision-weighted (Kalman) fusion, per dimension:
///   mu   = (v_bas * mu_gau + v_gau * mu_bas) / (v_bas + v_gau)
///   var  = 1 / (1/v_bas + 1/v_gau)
DiagGaussian kalman_fuse(const DiagGaussian& g_bas, const DiagGaussian& g_gau);

/// Exploitation-weighted fusion. zeta_bas in [0, 1]; the endpoints return the
/// corresponding input verbatim instead of evaluating a division by zero.
DiagGaussian weighted_fuse(const DiagGaussian& g_bas, const DiagGaussian& g_gau,
                           double zeta_bas);

/// Collapses a 4-motor distribution onto the two image axes. Motor pairs are
/// antagonistic, so the merged mean is the signed sum along the axis
/// (positive-direction motor minus negative-direction motor); variances are
/// averaged. Axis order of the result: (w, l), with w fed by motors (4, 2)
/// and l by motors (1, 3).
DiagGaussian merge_motor_pairs(const DiagGaussian& g4);

}  // namespace ipk::gauss
