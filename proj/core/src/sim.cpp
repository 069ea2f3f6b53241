#include "ipk/sim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ipk::sim {

Eigen::VectorXd Observation::to_vector() const {
  Eigen::VectorXd v(kDim);
  v << w, l, h, acc(0), acc(1), acc(2), acc(3);
  return v;
}

Observation Observation::from_vector(const Eigen::VectorXd& v) {
  if (v.size() != kDim) throw std::invalid_argument("Observation::from_vector: need 7 entries");
  Observation o;
  o.w = v(0);
  o.l = v(1);
  o.h = v(2);
  o.acc = v.segment<4>(3);
  o.visible = true;
  return o;
}

namespace {

// Rigid transform of one constant-curvature arc. The section starts at the
// local origin pointing along +z and bends by `theta` inside the plane at
// `azimuth` (measured from +x). Returns the end pose in section-local frame.
Pose arc_transform(double length, double theta, double azimuth) {
  Pose out;
  double chord_fwd, chord_lat;  // displacement along +z and along the bend direction
  if (std::abs(theta) < 1e-7) {
    // sin(t)/t and (1-cos t)/t expansions; keeps the map smooth through zero.
    chord_fwd = length * (1.0 - theta * theta / 6.0);
    chord_lat = length * theta * 0.5 * (1.0 - theta * theta / 12.0);
  } else {
    chord_fwd = length * std::sin(theta) / theta;
    chord_lat = length * (1.0 - std::cos(theta)) / theta;
  }
  const Eigen::Vector3d dir(std::cos(azimuth), std::sin(azimuth), 0.0);
  out.position = chord_lat * dir + Eigen::Vector3d(0.0, 0.0, chord_fwd);
  // Bend axis is perpendicular to the bend plane.
  const Eigen::Vector3d axis(-std::sin(azimuth), std::cos(azimuth), 0.0);
  out.orientation = Eigen::Quaterniond(Eigen::AngleAxisd(theta, axis));
  return out;
}

Pose compose(const Pose& a, const Pose& b) {
  Pose out;
  out.position = a.position + a.orientation * b.position;
  out.orientation = (a.orientation * b.orientation).normalized();
  return out;
}

}  // namespace

RobotState forward_kinematics(const Eigen::Vector4d& acc, const EnvConfig& cfg) {
  for (int i = 0; i < 4; ++i)
    if (std::abs(acc(i)) > cfg.acc_limit + 1e-9)
      throw std::invalid_argument("forward_kinematics: accumulated motor position beyond limit");

  RobotState st;
  st.acc = acc;
  // Antagonistic pairs: motors (1,3) bend section 1 in the vertical (l) plane,
  // motors (4,2) bend section 2 in the horizontal (w) plane.
  st.bend_angle[0] = cfg.bend_gain * (acc(0) - acc(2));
  st.bend_azimuth[0] = M_PI / 2.0;  // +y
  st.bend_angle[1] = cfg.bend_gain * (acc(3) - acc(1));
  st.bend_azimuth[1] = 0.0;  // +x

  const Pose p1 = arc_transform(cfg.section_length, st.bend_angle[0], st.bend_azimuth[0]);
  const Pose p2 = arc_transform(cfg.section_length, st.bend_angle[1], st.bend_azimuth[1]);
  st.tip = compose(p1, p2);
  return st;
}

Projection project_target(const Pose& tip, const Eigen::Vector3d& target, double fov) {
  const Eigen::Vector3d cam = tip.orientation.conjugate() * (target - tip.position);
  Projection pr;
  pr.h = cam.norm();
  if (pr.h < 1e-6) {
    pr.status = Projection::Status::kDegenerate;
    return pr;
  }
  const double half = 0.5 * fov;
  pr.w = std::atan2(cam.x(), cam.z()) / half;
  pr.l = std::atan2(cam.y(), cam.z()) / half;
  const bool in_front = cam.z() > 0.0;
  pr.status = (in_front && std::abs(pr.w) <= 1.0 && std::abs(pr.l) <= 1.0)
                  ? Projection::Status::kVisible
                  : Projection::Status::kNotVisible;
  return pr;
}

double raw_reward(const Observation& o, const Observation& o_next, double h_setpoint,
                  double lambda_h) {
  const double center_before = std::hypot(o.w, o.l);
  const double center_after = std::hypot(o_next.w, o_next.l);
  const double axial_before = std::abs(o.h - h_setpoint);
  const double axial_after = std::abs(o_next.h - h_setpoint);
  return (center_before - center_after) + lambda_h * (axial_before - axial_after);
}

double raw_reward_bound(const EnvConfig& cfg) {
  // View coordinates are atan2-based, so even off-screen they stay within
  // +-2*pi/fov per axis; the axial error cannot exceed the largest reachable
  // camera-to-target distance (shell radius plus arm length).
  const double coord_max = 2.0 * M_PI / cfg.fov;
  const double reach = cfg.trajectory.shell_r_max + 2.0 * cfg.section_length;
  return std::sqrt(2.0) * coord_max + cfg.lambda_h * reach;
}

TendonEnv::TendonEnv(EnvConfig cfg) : cfg_(std::move(cfg)), trajectory_({Eigen::Vector3d::Zero()}, 0.0, 1.0) {}

Observation TendonEnv::observe() const {
  const Projection pr = project_target(robot_.tip, trajectory_.current(), cfg_.fov);
  Observation o;
  o.w = pr.w;
  o.l = pr.l;
  o.h = pr.h;
  o.acc = robot_.acc;
  o.visible = pr.visible();
  return o;
}

Observation TendonEnv::reset(std::uint64_t seed) {
  robot_ = forward_kinematics(Eigen::Vector4d::Zero(), cfg_);
  // Resample until the first waypoint is inside the fresh camera's view; the
  // generator aims near the cone axis so this rarely takes more than one try.
  for (std::uint64_t attempt = 0;; ++attempt) {
    if (attempt >= 64)
      throw std::runtime_error("TendonEnv::reset: no trajectory with a visible first waypoint");
    trajectory_ = generate_target_trajectory(seed + attempt * 0x9e3779b97f4a7c15ULL,
                                             cfg_.n_waypoints, cfg_.trajectory);
    const Projection pr = project_target(robot_.tip, trajectory_.current(), cfg_.fov);
    if (pr.visible()) break;
  }
  obs_ = observe();
  h_setpoint_ = obs_.h;
  steps_ = 0;
  done_ = false;
  initialized_ = true;
  return obs_;
}

StepResult TendonEnv::step(const MotorCommand& action) {
  if (!initialized_) throw std::logic_error("TendonEnv::step before reset");
  if (done_) throw std::logic_error("TendonEnv::step after episode end");

  Eigen::Vector4d acc = robot_.acc;
  for (int i = 0; i < 4; ++i) {
    acc(i) += cfg_.step_gain * std::clamp(action(i), -1.0, 1.0);
    acc(i) = std::clamp(acc(i), -cfg_.acc_limit, cfg_.acc_limit);
  }
  robot_ = forward_kinematics(acc, cfg_);
  trajectory_.advance();

  const Observation prev = obs_;
  obs_ = observe();
  ++steps_;

  StepResult res;
  res.reward = raw_reward(prev, obs_, h_setpoint_, cfg_.lambda_h);
  if (!obs_.visible) {
    // Lost the target: large penalty, episode over.
    res.reward += -10.0;
    res.lost_target = true;
    res.done = true;
  } else if (trajectory_.at_end()) {
    res.reward += 100.0;
    res.completed = true;
    res.done = true;
  } else if (std::abs(obs_.w) < cfg_.epsilon && std::abs(obs_.l) < cfg_.epsilon) {
    res.reward += 10.0;
    res.centered = true;
  }
  if (steps_ >= cfg_.task_length) res.done = true;
  done_ = res.done;
  res.observation = obs_;
  return res;
}

}  // namespace ipk::sim
