#pragma once

// Independent reference computations shared by the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "teleop/world.hpp"

namespace teleop::oracle {

inline double mean(std::span<const double> v) {
  long double sum = 0.0L;
  for (double x : v) sum += x;
  return static_cast<double>(sum / static_cast<long double>(v.size()));
}

inline double mean(const std::deque<double>& v) {
  const std::vector<double> copy(v.begin(), v.end());
  return mean(std::span<const double>(copy));
}

/// Two-pass Bessel-corrected standard deviation.
inline double sample_std(std::span<const double> v) {
  const double m = mean(v);
  long double ss = 0.0L;
  for (double x : v) ss += static_cast<long double>(x - m) * (x - m);
  return static_cast<double>(std::sqrt(ss / static_cast<long double>(v.size() - 1)));
}

/// Wall boxes straight from the map text conventions, ignoring Maze::cell_box.
inline std::vector<std::pair<Eigen::Vector3d, Eigen::Vector3d>> wall_boxes(const Maze& m) {
  std::vector<std::pair<Eigen::Vector3d, Eigen::Vector3d>> out;
  for (int r = 0; r < m.rows; ++r) {
    for (int c = 0; c < m.cols; ++c) {
      if (m.walls[static_cast<std::size_t>(r * m.cols + c)] == 0) continue;
      const double x0 = c * m.cell_size;
      const double y0 = (m.rows - 1 - r) * m.cell_size;
      out.emplace_back(m.origin + Eigen::Vector3d(x0, y0, 0.0),
                       m.origin + Eigen::Vector3d(x0 + m.cell_size, y0 + m.cell_size, m.wall_height));
    }
  }
  return out;
}

/// Distance from p to the nearest obstacle surface (walls and ground); 0 inside a wall.
inline double clearance(const Maze& m, const Eigen::Vector3d& p) {
  double best = p.z() - m.origin.z();
  for (const auto& [lo, hi] : wall_boxes(m)) {
    const Eigen::Vector3d d = (lo - p).cwiseMax(p - hi).cwiseMax(Eigen::Vector3d::Zero());
    best = std::min(best, d.norm());
  }
  return best;
}

/// Samples the closed ball: n points on the sphere surface plus the center.
/// True when any sample lies inside a wall box or below the ground.
inline bool monte_carlo_contact(const Maze& m, const Eigen::Vector3d& p, double radius, int n,
                                std::mt19937_64& rng) {
  const auto boxes = wall_boxes(m);
  const auto inside = [&](const Eigen::Vector3d& q) {
    if (q.z() < m.origin.z()) return true;
    for (const auto& [lo, hi] : boxes) {
      if ((q.array() >= lo.array()).all() && (q.array() <= hi.array()).all()) return true;
    }
    return false;
  };
  if (inside(p)) return true;
  std::normal_distribution<double> g(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    Eigen::Vector3d d(g(rng), g(rng), g(rng));
    if (d.norm() == 0.0) continue;
    if (inside(p + radius * d.normalized())) return true;
  }
  return false;
}

}  // namespace teleop::oracle
