#include "ipk/trajectory.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace ipk::sim {

CubicSpline3::CubicSpline3(const std::vector<Eigen::Vector3d>& control_points)
    : points_(control_points) {
  const std::size_t n = points_.size();
  if (n < 2) throw std::invalid_argument("CubicSpline3: need at least 2 control points");
  second_derivs_.assign(n, Eigen::Vector3d::Zero());
  if (n == 2) return;

  // Tridiagonal solve for natural boundary conditions, classic y''-form.
  const std::size_t m = n - 2;
  std::vector<Eigen::Vector3d> rhs(m);
  std::vector<double> diag(m, 4.0), upper(m, 1.0);
  for (std::size_t i = 0; i < m; ++i)
    rhs[i] = 6.0 * (points_[i] - 2.0 * points_[i + 1] + points_[i + 2]);
  for (std::size_t i = 1; i < m; ++i) {
    const double f = 1.0 / diag[i - 1];
    diag[i] -= f * upper[i - 1];
    rhs[i] -= f * rhs[i - 1];
  }
  std::vector<Eigen::Vector3d> sol(m);
  sol[m - 1] = rhs[m - 1] / diag[m - 1];
  for (std::size_t i = m - 1; i-- > 0;) sol[i] = (rhs[i] - upper[i] * sol[i + 1]) / diag[i];
  for (std::size_t i = 0; i < m; ++i) second_derivs_[i + 1] = sol[i];
}

Eigen::Vector3d CubicSpline3::at(double u) const {
  const std::size_t segs = points_.size() - 1;
  double t = u * static_cast<double>(segs);
  std::size_t i = static_cast<std::size_t>(std::floor(t));
  if (i >= segs) i = segs - 1;
  t -= static_cast<double>(i);
  const double a = 1.0 - t;
  return a * points_[i] + t * points_[i + 1] +
         ((a * a * a - a) * second_derivs_[i] + (t * t * t - t) * second_derivs_[i + 1]) / 6.0;
}

TargetTrajectory::TargetTrajectory(std::vector<Eigen::Vector3d> waypoints, double r_min,
                                   double r_max)
    : waypoints_(std::move(waypoints)), r_min_(r_min), r_max_(r_max) {
  if (waypoints_.empty()) throw std::invalid_argument("TargetTrajectory: empty waypoint list");
}

void TargetTrajectory::advance() {
  if (index_ + 1 < waypoints_.size()) ++index_;
}

void TargetTrajectory::export_csv(const std::string& path) const {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("TargetTrajectory::export_csv: cannot open " + path);
  std::fprintf(f, "t,x,y,z\n");
  for (std::size_t i = 0; i < waypoints_.size(); ++i)
    std::fprintf(f, "%zu,%.10g,%.10g,%.10g\n", i, waypoints_[i].x(), waypoints_[i].y(),
                 waypoints_[i].z());
  std::fclose(f);
}

namespace {

Eigen::Vector3d spherical_point(double radius, double polar, double azimuth) {
  return {radius * std::sin(polar) * std::cos(azimuth),
          radius * std::sin(polar) * std::sin(azimuth), radius * std::cos(polar)};
}

std::vector<Eigen::Vector3d> sample_control_points(Rng& rng, const TrajectoryConfig& cfg) {
  // Margin keeps spline excursions from leaving the shell on most draws;
  // the caller still validates every discretized waypoint.
  const double margin = 0.05 * (cfg.shell_r_max - cfg.shell_r_min);
  const double r_lo = cfg.shell_r_min + margin;
  const double r_hi = cfg.shell_r_max - margin;

  std::vector<Eigen::Vector3d> pts;
  // First control point near the cone axis so a freshly reset camera sees it.
  double polar = uniform(rng, 0.0, 0.25 * cfg.max_polar_angle);
  double azimuth = uniform(rng, -M_PI, M_PI);
  pts.push_back(spherical_point(uniform(rng, r_lo, r_hi), polar, azimuth));
  for (int i = 1; i < cfg.control_points; ++i) {
    polar += uniform(rng, -cfg.control_angle_step, cfg.control_angle_step);
    polar = std::clamp(polar, 0.02, cfg.max_polar_angle);
    azimuth += uniform(rng, -cfg.control_angle_step, cfg.control_angle_step);
    pts.push_back(spherical_point(uniform(rng, r_lo, r_hi), polar, azimuth));
  }
  return pts;
}

}  // namespace

TargetTrajectory generate_target_trajectory(std::uint64_t seed, int n_waypoints,
                                            const TrajectoryConfig& cfg) {
  if (cfg.shell_r_min >= cfg.shell_r_max)
    throw std::invalid_argument("generate_target_trajectory: infeasible shell (r_min >= r_max)");
  if (n_waypoints < 2)
    throw std::invalid_argument("generate_target_trajectory: need at least 2 waypoints");

  Rng rng(splitmix64(seed ^ 0x74726a6563746f72ULL));
  constexpr int kMaxAttempts = 256;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    const auto control = sample_control_points(rng, cfg);
    const CubicSpline3 spline(control);
    std::vector<Eigen::Vector3d> wp(static_cast<std::size_t>(n_waypoints));
    for (int i = 0; i < n_waypoints; ++i)
      wp[static_cast<std::size_t>(i)] = spline.at(static_cast<double>(i) / (n_waypoints - 1));

    bool ok = true;
    for (int i = 0; ok && i < n_waypoints; ++i) {
      const double r = wp[static_cast<std::size_t>(i)].norm();
      if (r < cfg.shell_r_min || r > cfg.shell_r_max) ok = false;
      if (i > 0 && (wp[static_cast<std::size_t>(i)] - wp[static_cast<std::size_t>(i - 1)]).norm() >
                       cfg.max_waypoint_step)
        ok = false;
    }
    if (ok) return TargetTrajectory(std::move(wp), cfg.shell_r_min, cfg.shell_r_max);
  }
  throw std::runtime_error("generate_target_trajectory: no valid trajectory after resampling");
}

}  // namespace ipk::sim
