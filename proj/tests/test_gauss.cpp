#include <Eigen/Core>
#include <cmath>

#include "doctest.h"
#include "ipk/gauss.hpp"
#include "ipk/rng.hpp"

using ipk::gauss::DiagGaussian;

namespace {

DiagGaussian random_gaussian(ipk::Rng& rng, int dim, double var_lo = 1e-3, double var_hi = 4.0) {
  Eigen::VectorXd mean(dim), var(dim);
  for (int i = 0; i < dim; ++i) {
    mean(i) = ipk::uniform(rng, -3.0, 3.0);
    var(i) = ipk::uniform(rng, var_lo, var_hi);
  }
  return DiagGaussian(mean, var);
}

double log_density(const DiagGaussian& g, const Eigen::VectorXd& x) {
  double lp = 0.0;
  for (int i = 0; i < g.dim(); ++i) {
    const double d = x(i) - g.mean()(i);
    lp += -0.5 * (std::log(2.0 * M_PI * g.var()(i)) + d * d / g.var()(i));
  }
  return lp;
}

// Monte-Carlo KL(g1 || g2): E_{x~g1}[log g1(x) - log g2(x)].
double mc_kl(const DiagGaussian& g1, const DiagGaussian& g2, int n, ipk::Rng& rng) {
  double acc = 0.0;
  Eigen::VectorXd x(g1.dim());
  for (int s = 0; s < n; ++s) {
    for (int i = 0; i < g1.dim(); ++i)
      x(i) = g1.mean()(i) + std::sqrt(g1.var()(i)) * ipk::normal(rng);
    acc += log_density(g1, x) - log_density(g2, x);
  }
  return acc / n;
}

}  // namespace

TEST_SUITE("gauss") {

TEST_CASE("construction validates and floors variances") {
  CHECK_THROWS(DiagGaussian(Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(3)));
  CHECK_THROWS(DiagGaussian(Eigen::VectorXd(), Eigen::VectorXd()));
  Eigen::VectorXd bad_var = Eigen::VectorXd::Ones(2);
  bad_var(1) = -0.1;
  CHECK_THROWS(DiagGaussian(Eigen::VectorXd::Zero(2), bad_var));
  Eigen::VectorXd nan_mean = Eigen::VectorXd::Zero(2);
  nan_mean(0) = std::nan("");
  CHECK_THROWS(DiagGaussian(nan_mean, Eigen::VectorXd::Ones(2)));

  DiagGaussian g(Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(3).array() + 1e-12);
  for (int i = 0; i < 3; ++i) CHECK(g.var()(i) == ipk::gauss::kVarianceFloor);

  DiagGaussian s = DiagGaussian::standard(4);
  CHECK(s.dim() == 4);
  CHECK(s.mean().isZero());
  CHECK(s.var().isOnes());
}

TEST_CASE("kl divergence is zero at identity and positive otherwise") {
  ipk::Rng rng(42);
  for (int trial = 0; trial < 200; ++trial) {
    const DiagGaussian g1 = random_gaussian(rng, 2);
    const DiagGaussian g2 = random_gaussian(rng, 2);
    CHECK(ipk::gauss::kl_divergence(g1, g1) == doctest::Approx(0.0).epsilon(1e-12));
    const double kl = ipk::gauss::kl_divergence(g1, g2);
    CHECK(kl >= 0.0);
    CHECK(std::isfinite(kl));
  }
}

TEST_CASE("kl divergence rejects unmerged 4-motor inputs") {
  const DiagGaussian g4 = DiagGaussian::standard(4);
  CHECK_THROWS(ipk::gauss::kl_divergence(g4, g4));
}

TEST_CASE("kl divergence matches a monte-carlo estimate") {
  ipk::Rng rng(7);
  for (int trial = 0; trial < 4; ++trial) {
    const DiagGaussian g1 = random_gaussian(rng, 2, 0.1, 2.0);
    const DiagGaussian g2 = random_gaussian(rng, 2, 0.1, 2.0);
    const double exact = ipk::gauss::kl_divergence(g1, g2);
    const double est = mc_kl(g1, g2, 200000, rng);
    // MC error scales with the divergence itself; 3 percent + absolute slack.
    CHECK(est == doctest::Approx(exact).epsilon(0.03).scale(std::max(1.0, exact)));
  }
}

TEST_CASE("kalman fusion adds precisions and interpolates means") {
  ipk::Rng rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    const DiagGaussian a = random_gaussian(rng, 4);
    const DiagGaussian b = random_gaussian(rng, 4);
    const DiagGaussian f = ipk::gauss::kalman_fuse(a, b);
    const DiagGaussian f_swapped = ipk::gauss::kalman_fuse(b, a);
    for (int i = 0; i < 4; ++i) {
      CHECK(1.0 / f.var()(i) ==
            doctest::Approx(1.0 / a.var()(i) + 1.0 / b.var()(i)).epsilon(1e-12));
      const double lo = std::min(a.mean()(i), b.mean()(i));
      const double hi = std::max(a.mean()(i), b.mean()(i));
      CHECK(f.mean()(i) >= lo - 1e-12);
      CHECK(f.mean()(i) <= hi + 1e-12);
      CHECK(f.mean()(i) == doctest::Approx(f_swapped.mean()(i)).epsilon(1e-14));
      CHECK(f.var()(i) == doctest::Approx(f_swapped.var()(i)).epsilon(1e-14));
      // Fused estimate is sharper than either source.
      CHECK(f.var()(i) <= std::min(a.var()(i), b.var()(i)) + 1e-15);
    }
  }
}

TEST_CASE("weighted fusion endpoints return the inputs verbatim") {
  ipk::Rng rng(12);
  const DiagGaussian a = random_gaussian(rng, 4);
  const DiagGaussian b = random_gaussian(rng, 4);
  const DiagGaussian at1 = ipk::gauss::weighted_fuse(a, b, 1.0);
  const DiagGaussian at0 = ipk::gauss::weighted_fuse(a, b, 0.0);
  CHECK(at1.mean() == a.mean());
  CHECK(at1.var() == a.var());
  CHECK(at0.mean() == b.mean());
  CHECK(at0.var() == b.var());
  CHECK_THROWS(ipk::gauss::weighted_fuse(a, b, 1.2));
  CHECK_THROWS(ipk::gauss::weighted_fuse(a, b, -0.1));
}

TEST_CASE("weighted fusion interpolates precisions") {
  ipk::Rng rng(13);
  for (int trial = 0; trial < 500; ++trial) {
    const DiagGaussian a = random_gaussian(rng, 4);
    const DiagGaussian b = random_gaussian(rng, 4);
    const double z = ipk::uniform(rng, 0.01, 0.99);
    const DiagGaussian f = ipk::gauss::weighted_fuse(a, b, z);
    for (int i = 0; i < 4; ++i) {
      CHECK(1.0 / f.var()(i) ==
            doctest::Approx(z / a.var()(i) + (1.0 - z) / b.var()(i)).epsilon(1e-12));
      // Mean solves the same precision-weighted average.
      const double expect = (z / a.var()(i) * a.mean()(i) + (1.0 - z) / b.var()(i) * b.mean()(i)) /
                            (z / a.var()(i) + (1.0 - z) / b.var()(i));
      CHECK(f.mean()(i) == doctest::Approx(expect).epsilon(1e-12));
    }
  }
}

TEST_CASE("weighted fusion at one half doubles the kalman variance") {
  ipk::Rng rng(14);
  const DiagGaussian a = random_gaussian(rng, 4);
  const DiagGaussian b = random_gaussian(rng, 4);
  const DiagGaussian k = ipk::gauss::kalman_fuse(a, b);
  const DiagGaussian h = ipk::gauss::weighted_fuse(a, b, 0.5);
  for (int i = 0; i < 4; ++i) {
    CHECK(h.mean()(i) == doctest::Approx(k.mean()(i)).epsilon(1e-12));
    CHECK(h.var()(i) == doctest::Approx(2.0 * k.var()(i)).epsilon(1e-12));
  }
}

TEST_CASE("motor-pair merge maps antagonists onto signed axes") {
  Eigen::VectorXd mean(4), var(4);
  mean << 0.5, -0.2, 0.1, 0.7;  // motors 1..4
  var << 0.04, 0.01, 0.02, 0.03;
  const DiagGaussian merged = ipk::gauss::merge_motor_pairs(DiagGaussian(mean, var));
  CHECK(merged.dim() == 2);
  // w takes motor4 - motor2, l takes motor1 - motor3.
  CHECK(merged.mean()(0) == doctest::Approx(0.7 - (-0.2)).epsilon(1e-15));
  CHECK(merged.mean()(1) == doctest::Approx(0.5 - 0.1).epsilon(1e-15));
  CHECK(merged.var()(0) == doctest::Approx(0.5 * (0.03 + 0.01)).epsilon(1e-15));
  CHECK(merged.var()(1) == doctest::Approx(0.5 * (0.04 + 0.02)).epsilon(1e-15));

  CHECK_THROWS(ipk::gauss::merge_motor_pairs(DiagGaussian::standard(2)));
}

TEST_CASE("motor-pair merge is linear in the mean") {
  ipk::Rng rng(15);
  for (int trial = 0; trial < 100; ++trial) {
    const DiagGaussian g = random_gaussian(rng, 4);
    Eigen::VectorXd shifted_mean = g.mean();
    const double delta = ipk::uniform(rng, -1.0, 1.0);
    shifted_mean(3) += delta;  // push motor 4
    const DiagGaussian m0 = ipk::gauss::merge_motor_pairs(g);
    const DiagGaussian m1 =
        ipk::gauss::merge_motor_pairs(DiagGaussian(shifted_mean, g.var()));
    CHECK(m1.mean()(0) == doctest::Approx(m0.mean()(0) + delta).epsilon(1e-12));
    CHECK(m1.mean()(1) == doctest::Approx(m0.mean()(1)).epsilon(1e-12));
  }
}

}  // TEST_SUITE
