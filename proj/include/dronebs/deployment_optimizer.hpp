#pragma once

// Greedy sequential placement of drone base stations over estimate disks.
// Each round solves the single-disk maximum cover exactly by enumerating
// candidate centers.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "dronebs/geometry.hpp"
#include "dronebs/localization.hpp"

namespace dronebs {

struct CoverInstance {
  std::vector<EstimateDisk> targets;
  double coverage_radius = 0.0;
  /// Returned as the center when there is nothing to cover.
  Vec2 fallback_center;
};

struct PlacementResult {
  Vec2 center;
  /// Ids of the targets entirely covered, ascending.
  std::vector<int> covered_ids;
};

struct DeploymentPlan {
  std::vector<PlacementResult> placements;
  int total_covered = 0;
  /// Placements made after every target was already covered; they sit at
  /// the fallback center and cover nothing.
  int idle = 0;
};

/// True when the disk of radius `rc` at `drone_center` contains the whole
/// estimate disk, i.e. the centers are within rc - r_e (closed, kGeomTol).
inline bool covers_entirely(const Vec2& drone_center, const EstimateDisk& target, double rc) {
  const double reach = rc - target.radius_re;
  if (!(reach > 0.0)) {
    throw std::domain_error("covers_entirely: coverage radius must exceed r_e");
  }
  const double r = reach + kGeomTol;
  return distance2(drone_center, target.center) <= r * r;
}

namespace detail {

/// Uniform bucket grid over target centers for radius queries.
class TargetGrid {
 public:
  TargetGrid(const std::vector<EstimateDisk>& targets, double cell)
      : targets_(targets), cell_(cell) {
    for (std::size_t i = 0; i < targets.size(); ++i) {
      buckets_[key(cell_index(targets[i].center.x), cell_index(targets[i].center.y))].push_back(
          static_cast<int>(i));
    }
  }

  /// Indices of targets entirely covered by a drone at p, in input order.
  template <class Fn>
  void for_each_covered(const Vec2& p, double rc, Fn&& fn) const {
    const std::int64_t cx = cell_index(p.x);
    const std::int64_t cy = cell_index(p.y);
    scratch_.clear();
    for (std::int64_t dx = -1; dx <= 1; ++dx) {
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        const auto it = buckets_.find(key(cx + dx, cy + dy));
        if (it == buckets_.end()) continue;
        for (int i : it->second) {
          if (covers_entirely(p, targets_[i], rc)) scratch_.push_back(i);
        }
      }
    }
    std::sort(scratch_.begin(), scratch_.end());
    for (int i : scratch_) fn(i);
  }

  int count_covered(const Vec2& p, double rc) const {
    int n = 0;
    const std::int64_t cx = cell_index(p.x);
    const std::int64_t cy = cell_index(p.y);
    for (std::int64_t dx = -1; dx <= 1; ++dx) {
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        const auto it = buckets_.find(key(cx + dx, cy + dy));
        if (it == buckets_.end()) continue;
        for (int i : it->second) n += covers_entirely(p, targets_[i], rc) ? 1 : 0;
      }
    }
    return n;
  }

 private:
  std::int64_t cell_index(double v) const {
    return static_cast<std::int64_t>(std::floor(v / cell_));
  }
  // Exact packing of two 32-bit cell indices, so distinct cells never share a bucket.
  static std::int64_t key(std::int64_t x, std::int64_t y) {
    return static_cast<std::int64_t>((static_cast<std::uint64_t>(x) << 32) ^
                                     (static_cast<std::uint64_t>(y) & 0xffffffffULL));
  }

  const std::vector<EstimateDisk>& targets_;
  double cell_;
  std::unordered_map<std::int64_t, std::vector<int>> buckets_;
  mutable std::vector<int> scratch_;
};

/// Lexicographic (x, then y) order treating x values within kGeomTol as
/// equal.
inline bool tie_break_less(const Vec2& a, const Vec2& b) {
  if (std::abs(a.x - b.x) > kGeomTol) return a.x < b.x;
  return a.y < b.y;
}

}  // namespace detail

/// Intersection points of two circles (0, 1 when tangent, or 2).
inline std::vector<Vec2> circle_intersections(const Vec2& c0, double r0, const Vec2& c1,
                                              double r1) {
  const double d = distance(c0, c1);
  if (d <= 0.0 || d > r0 + r1 + kGeomTol || d < std::abs(r0 - r1) - kGeomTol) return {};
  const Vec2 e = (c1 - c0) / d;
  const double a = (d * d + r0 * r0 - r1 * r1) / (2.0 * d);
  const double h2 = r0 * r0 - a * a;
  const Vec2 mid = c0 + e * a;
  if (h2 <= 0.0) return {mid};
  const double h = std::sqrt(h2);
  return {mid + perp(e) * h, mid - perp(e) * h};
}

/// Globally optimal single placement: the center maximizing the number of
/// entirely covered targets.
///
/// Covering target i means the drone center lies in the disk of radius
/// rc - r_e_i around the target center. A nonempty intersection of such
/// disks either contains some target center or has a vertex where two
/// boundary circles cross, so scoring every target center and every
/// pairwise circle intersection finds the optimum. Equal scores go to the
/// lexicographically smallest center.
inline PlacementResult best_single_disk(const CoverInstance& instance) {
  const auto& targets = instance.targets;
  const double rc = instance.coverage_radius;
  double max_reach = 0.0;
  for (const auto& t : targets) {
    const double reach = rc - t.radius_re;
    if (!(reach > 0.0)) {
      throw std::domain_error("best_single_disk: effective radius Rc - r_e must be > 0");
    }
    max_reach = std::max(max_reach, reach);
  }
  if (targets.empty()) return {instance.fallback_center, {}};

  const detail::TargetGrid grid(targets, max_reach + kGeomTol);
  Vec2 best_center = targets.front().center;
  int best_count = -1;
  auto consider = [&](const Vec2& p) {
    const int n = grid.count_covered(p, rc);
    if (n > best_count || (n == best_count && detail::tie_break_less(p, best_center))) {
      best_count = n;
      best_center = p;
    }
  };

  for (const auto& t : targets) consider(t.center);
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const double ri = rc - targets[i].radius_re;
    for (std::size_t j = i + 1; j < targets.size(); ++j) {
      const double rj = rc - targets[j].radius_re;
      if (distance(targets[i].center, targets[j].center) > ri + rj + kGeomTol) continue;
      for (const Vec2& p : circle_intersections(targets[i].center, ri, targets[j].center, rj)) {
        consider(p);
      }
    }
  }

  PlacementResult out{best_center, {}};
  grid.for_each_covered(best_center, rc,
                        [&](int i) { out.covered_ids.push_back(targets[i].user_id); });
  std::sort(out.covered_ids.begin(), out.covered_ids.end());
  return out;
}

/// `m` rounds of best_single_disk, removing each round's covered targets.
/// Rounds that find nothing left to cover are counted as idle.
inline DeploymentPlan greedy_deploy(const std::vector<EstimateDisk>& targets, int m, double rc,
                                    const Vec2& fallback_center = {}) {
  if (m < 1) throw std::invalid_argument("greedy_deploy: m must be >= 1");
  for (const auto& t : targets) {
    if (!(rc > t.radius_re)) throw std::domain_error("greedy_deploy: need Rc > r_e");
  }
  DeploymentPlan plan;
  std::vector<EstimateDisk> remaining = targets;
  for (int round = 0; round < m; ++round) {
    if (remaining.empty()) ++plan.idle;
    PlacementResult placed = best_single_disk({remaining, rc, fallback_center});
    std::erase_if(remaining, [&](const EstimateDisk& t) {
      return std::binary_search(placed.covered_ids.begin(), placed.covered_ids.end(), t.user_id);
    });
    plan.total_covered += static_cast<int>(placed.covered_ids.size());
    plan.placements.push_back(std::move(placed));
  }
  return plan;
}

}  // namespace dronebs
