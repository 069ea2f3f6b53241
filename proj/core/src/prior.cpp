#include "ipk/prior.hpp"

#include <cmath>
#include <stdexcept>

namespace ipk::prior {

Eigen::Vector2d PriorMap::direction(int motor_index) {
  if (motor_index < 0 || motor_index > 3)
    throw std::invalid_argument("PriorMap::direction: motor index out of range");
  Eigen::Vector2d d = Eigen::Vector2d::Zero();
  d(axis_of[motor_index]) = sign_of[motor_index];
  return d;
}

namespace {

// Motors addressing each image axis, positive-direction motor first.
constexpr int kAxisMotors[2][2] = {{3, 1}, {0, 2}};  // w: motors 4,2; l: motors 1,3

double axis_coord(const sim::Observation& obs, int axis) {
  return axis == PriorMap::kAxisW ? obs.w : obs.l;
}

}  // namespace

std::optional<sim::MotorCommand> basic_action(const sim::Observation& obs,
                                              const BasicConfig& cfg, Rng& rng) {
  if (!obs.visible) return std::nullopt;
  sim::MotorCommand a = sim::MotorCommand::Zero();
  for (int axis = 0; axis < 2; ++axis) {
    const double c = axis_coord(obs, axis);
    if (std::abs(c) <= cfg.deadband) continue;
    const int motor = kAxisMotors[axis][uniform_int(rng, 2)];
    // Cover the target's direction with whichever motor the coin picked.
    a(motor) = PriorMap::sign_of[motor] * (c > 0.0 ? cfg.magnitude : -cfg.magnitude);
  }
  return a;
}

sim::MotorCommand canonical_basic_action(const sim::Observation& obs, const BasicConfig& cfg) {
  sim::MotorCommand a = sim::MotorCommand::Zero();
  for (int axis = 0; axis < 2; ++axis) {
    const double c = axis_coord(obs, axis);
    if (std::abs(c) <= cfg.deadband) continue;
    const int motor = kAxisMotors[axis][0];
    a(motor) = c > 0.0 ? cfg.magnitude : -cfg.magnitude;
  }
  return a;
}

AccuracyEstimate estimate_accuracy(const std::vector<ExecutedStep>& steps) {
  std::vector<double> samples[2];
  int usable = 0;
  for (const ExecutedStep& s : steps) {
    const Eigen::Vector2d b(s.obs.w, s.obs.l);
    const Eigen::Vector2d d(s.obs_next.w - s.obs.w, s.obs_next.l - s.obs.l);
    if (d.norm() < 1e-9 || b.norm() < 1e-9) continue;

    // Per-axis actuation magnitude; a step with no motor above threshold on
    // either axis is unusable.
    const double mag[2] = {std::abs(PriorMap::net_w(s.action)),
                           std::abs(PriorMap::net_l(s.action))};
    if (mag[0] <= 1e-3 && mag[1] <= 1e-3) continue;
    ++usable;

    const Eigen::Vector2d u = -b.normalized();
    const Eigen::Vector2d e = (d - d.dot(u) * u) / d.norm();
    for (int axis = 0; axis < 2; ++axis)
      if (mag[axis] > 1e-3) samples[axis].push_back(e(axis) / mag[axis]);
  }
  if (usable < 2) throw std::runtime_error("estimate_accuracy: fewer than 2 usable steps");

  AccuracyEstimate est;
  est.samples = usable;
  for (int axis = 0; axis < 2; ++axis) {
    const auto& xs = samples[axis];
    if (xs.size() < 2) {
      est.mean(axis) = 0.0;
      est.var(axis) = gauss::kVarianceFloor;
      continue;
    }
    double m = 0.0;
    for (double x : xs) m += x;
    m /= static_cast<double>(xs.size());
    double v = 0.0;
    for (double x : xs) v += (x - m) * (x - m);
    v /= static_cast<double>(xs.size() - 1);
    est.mean(axis) = m;
    est.var(axis) = std::max(v, gauss::kVarianceFloor);
  }
  return est;
}

gauss::DiagGaussian basic_distribution(const sim::MotorCommand& a_bas,
                                       const AccuracyEstimate& est, double exploration_var) {
  Eigen::VectorXd mean(4), var(4);
  for (int i = 0; i < 4; ++i) {
    const double a = a_bas(i);
    if (std::abs(a) > 1e-3) {
      const int axis = PriorMap::axis_of[i];
      mean(i) = a * (1.0 + est.mean(axis));
      var(i) = std::max(a * a * est.var(axis), gauss::kVarianceFloor);
    } else {
      mean(i) = 0.0;
      var(i) = exploration_var;
    }
  }
  return gauss::DiagGaussian(mean, var);
}

gauss::DiagGaussian basic_axis_distribution(const sim::Observation& obs, const BasicConfig& cfg,
                                            const AccuracyEstimate& est) {
  return gauss::merge_motor_pairs(
      basic_distribution(canonical_basic_action(obs, cfg), est, cfg.exploration_var));
}

}  // namespace ipk::prior
