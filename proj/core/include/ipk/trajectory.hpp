#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "ipk/rng.hpp"

namespace ipk::sim {

/// Natural cubic spline through control points, one spline per coordinate,
/// parameterized uniformly on [0, 1].
class CubicSpline3 {
 public:
  explicit CubicSpline3(const std::vector<Eigen::Vector3d>& control_points);

  Eigen::Vector3d at(double u) const;

 private:
  std::vector<Eigen::Vector3d> points_;
  std::vector<Eigen::Vector3d> second_derivs_;
};

struct TrajectoryConfig {
  double shell_r_min = 0.55;   // meters
  double shell_r_max = 0.85;
  double max_polar_angle = 0.9;   // control points stay in this cone around +z
  int control_points = 5;
  double control_angle_step = 0.35;  // max angular move between control points
  double max_waypoint_step = 0.025;  // meters between consecutive waypoints
};

/// Discretized target path inside the workspace shell.
class TargetTrajectory {
 public:
  TargetTrajectory() = default;
  TargetTrajectory(std::vector<Eigen::Vector3d> waypoints, double r_min, double r_max);

  const Eigen::Vector3d& current() const { return waypoints_.at(index_); }
  const std::vector<Eigen::Vector3d>& waypoints() const { return waypoints_; }
  std::size_t index() const { return index_; }
  bool at_end() const { return index_ + 1 >= waypoints_.size(); }
  void advance();
  void rewind() { index_ = 0; }
  double r_min() const { return r_min_; }
  double r_max() const { return r_max_; }

  void export_csv(const std::string& path) const;

 private:
  std::vector<Eigen::Vector3d> waypoints_;
  std::size_t index_ = 0;
  double r_min_ = 0.0;
  double r_max_ = 0.0;
};

/// Samples random control points in the shell cone, interpolates with a cubic
/// spline and discretizes. Resamples until every waypoint lies in the shell
/// and consecutive waypoints are no farther apart than the configured step.
TargetTrajectory generate_target_trajectory(std::uint64_t seed, int n_waypoints,
                                            const TrajectoryConfig& cfg);

}  // namespace ipk::sim
