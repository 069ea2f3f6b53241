#pragma once

#include <Eigen/Core>
#include <optional>
#include <vector>

#include "ipk/gauss.hpp"
#include "ipk/rng.hpp"
#include "ipk/sim.hpp"

namespace ipk::prior {

/// Rough per-motor actuation directions in image axes: motor 1 recenters
/// targets above center (+l), motor 3 below (-l), motor 4 to the right (+w),
/// motor 2 to the left (-w). Indices 0..3 stand for motors 1..4.
struct PriorMap {
  static constexpr int kAxisW = 0;
  static constexpr int kAxisL = 1;
  static constexpr int axis_of[4] = {kAxisL, kAxisW, kAxisL, kAxisW};
  static constexpr double sign_of[4] = {+1.0, -1.0, -1.0, +1.0};

  static Eigen::Vector2d direction(int motor_index);
  // Net actuation per image axis implied by a motor command (antagonists
  // cancel): positive values push the view toward positive w / l targets.
  static double net_w(const Eigen::Vector4d& a) { return a(3) - a(1); }
  static double net_l(const Eigen::Vector4d& a) { return a(0) - a(2); }
};

struct BasicConfig {
  double magnitude = 0.6;  // inside the open command box, so its inverse squash stays moderate
  double deadband = 0.05;
  double exploration_var = 1e-2;  // variance credited to motors the rule leaves idle
};

/// Rule-based corrective step: per image axis beyond the deadband, actuate one
/// of the two motors of that axis (chosen uniformly) so the net actuation
/// points at the target. Returns nothing when the target is not visible.
std::optional<sim::MotorCommand> basic_action(const sim::Observation& obs,
                                              const BasicConfig& cfg, Rng& rng);

/// The coin-flip-free representative (always the positive-direction motor of
/// the pair). Its pair-merged distribution equals that of any random choice.
sim::MotorCommand canonical_basic_action(const sim::Observation& obs, const BasicConfig& cfg);

struct ExecutedStep {
  sim::Observation obs;
  sim::MotorCommand action = sim::MotorCommand::Zero();
  sim::Observation obs_next;
};

struct AccuracyEstimate {
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();  // per-unit-action deviation, (w,l)
  Eigen::Vector2d var = Eigen::Vector2d::Constant(gauss::kVarianceFloor);
  int samples = 0;
};

/// Post-hoc controller-accuracy estimate. Per step the anticipated view motion
/// points from the target offset b_t toward the image center; the component of
/// the realized motion d_t orthogonal to it, normalized by ||d_t|| and by the
/// actuated motor magnitude of each axis, is one deviation sample. Steps with
/// ||d_t|| < 1e-9 or no motor above 1e-3 are skipped; fewer than two usable
/// steps is an error.
AccuracyEstimate estimate_accuracy(const std::vector<ExecutedStep>& steps);

/// Motor-space Gaussian around an executed rule action: actuated motors get
/// mean a*(1+mu) and variance a^2*var using the image-axis estimate of their
/// pair; idle motors get zero mean and the exploration variance.
gauss::DiagGaussian basic_distribution(const sim::MotorCommand& a_bas,
                                       const AccuracyEstimate& est, double exploration_var);

/// Pair-merged (w,l) distribution of the rule policy at an observation;
/// invariant to the motor coin flips, so usable for divergence bookkeeping.
gauss::DiagGaussian basic_axis_distribution(const sim::Observation& obs, const BasicConfig& cfg,
                                            const AccuracyEstimate& est);

}  // namespace ipk::prior
