#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <cstdint>
#include <optional>

#include "ipk/trajectory.hpp"

namespace ipk::sim {

/// Signed per-step wind/release command for the four tendon motors, each
/// component in [-1, 1]. The environment scales by its step gain internally.
using MotorCommand = Eigen::Vector4d;

struct Observation {
  double w = 0.0;  // horizontal view coordinate, -1..1 inside the view
  double l = 0.0;  // vertical view coordinate
  double h = 0.0;  // camera-to-target distance, meters
  Eigen::Vector4d acc = Eigen::Vector4d::Zero();  // accumulated motor positions
  bool visible = true;

  static constexpr int kDim = 7;
  Eigen::VectorXd to_vector() const;
  static Observation from_vector(const Eigen::VectorXd& v);
};

struct Pose {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Quaterniond orientation = Eigen::Quaterniond::Identity();
};

struct RobotState {
  Eigen::Vector4d acc = Eigen::Vector4d::Zero();
  double bend_angle[2] = {0.0, 0.0};    // per section, radians
  double bend_azimuth[2] = {0.0, 0.0};  // bend-plane azimuth about the backbone
  Pose tip;
};

struct Projection {
  enum class Status { kVisible, kNotVisible, kDegenerate };
  Status status = Status::kVisible;
  double w = 0.0;
  double l = 0.0;
  double h = 0.0;
  bool visible() const { return status == Status::kVisible; }
};

struct EnvConfig {
  double fov = 1.0471975511965976;  // full view angle, radians (60 deg)
  double section_length = 0.2;      // meters per section
  double bend_gain = 0.9;           // radians of bend per unit pair difference
  double step_gain = 0.05;          // accumulated units per unit command per step
  double acc_limit = 1.5;
  double lambda_h = 1.0;
  double epsilon = 0.05;  // centered-bonus box half width
  int task_length = 300;
  int n_waypoints = 300;
  TrajectoryConfig trajectory;
};

struct StepResult {
  Observation observation;
  double reward = 0.0;
  bool done = false;
  bool centered = false;
  bool completed = false;
  bool lost_target = false;
};

/// Piecewise-constant-curvature tip pose for accumulated motor positions.
/// Section 1 (proximal) bends in the l plane driven by the (1,3) pair,
/// section 2 (distal) in the w plane driven by the (4,2) pair; each section
/// is a circular arc of fixed length. Zero input gives the straight
/// configuration along the world +z axis, which is also the camera axis.
RobotState forward_kinematics(const Eigen::Vector4d& acc, const EnvConfig& cfg);

/// Angle-normalized view coordinates: w = atan2(x_cam, z_cam) / (fov/2), same
/// for l with y_cam; h is the Euclidean camera-to-target distance. Targets
/// behind the image plane or outside the unit box report not-visible.
Projection project_target(const Pose& tip, const Eigen::Vector3d& target, double fov);

/// Observation-change reward: view-centering progress plus the change in the
/// axial distance error against the setpoint captured at reset.
double raw_reward(const Observation& o, const Observation& o_next, double h_setpoint,
                  double lambda_h);

/// Largest possible |raw_reward| under the config's clamps; used by the
/// reward-bound property.
double raw_reward_bound(const EnvConfig& cfg);

class TendonEnv {
 public:
  explicit TendonEnv(EnvConfig cfg);

  Observation reset(std::uint64_t seed);
  StepResult step(const MotorCommand& action);

  bool done() const { return done_; }
  int steps_taken() const { return steps_; }
  double h_setpoint() const { return h_setpoint_; }
  const Observation& observation() const { return obs_; }
  const RobotState& robot() const { return robot_; }
  const TargetTrajectory& trajectory() const { return trajectory_; }
  const EnvConfig& config() const { return cfg_; }

  double reward_lower_bound() const { return -10.0 - raw_reward_bound(cfg_); }
  double reward_upper_bound() const { return 100.0 + raw_reward_bound(cfg_); }

 private:
  Observation observe() const;

  EnvConfig cfg_;
  TargetTrajectory trajectory_;
  RobotState robot_;
  Observation obs_;
  double h_setpoint_ = 0.0;
  int steps_ = 0;
  bool done_ = true;
  bool initialized_ = false;
};

}  // namespace ipk::sim
