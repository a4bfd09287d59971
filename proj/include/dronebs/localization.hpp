#pragma once

// UTDOA positioning by a three-drone fleet: serving-drone selection,
// synthetic range-difference measurements, hyperbolic least squares, and
// the bounded-error estimate disk handed to the deployment optimizer.

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "dronebs/geometry.hpp"

namespace dronebs {

struct UserTruth {
  int id = 0;
  Vec2 position;
};

/// Arrival-time difference expressed in meters (time x propagation speed),
/// relative to the reference (serving) drone.
struct TdoaMeasurement {
  int reference_drone = 0;
  int other_drone = 0;
  double delta_range = 0.0;
  double noise_sigma = 0.0;
};

struct EstimateDisk {
  int user_id = 0;
  Vec2 center;
  double radius_re = 0.0;
};

enum class EstimateMode { abstract_disk, tdoa };

/// Nearest drone to the user; distances equal to within kGeomTol count as a
/// tie and go to the lowest index. The user must be inside all three
/// coverage disks.
inline int assign_serving_drone(const Vec2& user, std::span<const Vec2, 3> drones, double rc) {
  if (!in_overlap(drones, rc, user)) {
    throw std::domain_error("assign_serving_drone: user outside the overlapped coverage");
  }
  int best = 0;
  for (int k = 1; k < 3; ++k) {
    if (distance(user, drones[k]) < distance(user, drones[best]) - kGeomTol) best = k;
  }
  return best;
}

namespace detail {

inline void require_distinct(std::span<const Vec2, 3> drones) {
  for (int i = 0; i < 3; ++i) {
    for (int j = i + 1; j < 3; ++j) {
      if (distance(drones[i], drones[j]) <= kGeomTol) {
        throw std::invalid_argument("tdoa: coincident drones");
      }
    }
  }
}

inline void require_not_collinear(std::span<const Vec2, 3> drones) {
  require_distinct(drones);
  const Vec2 u = drones[1] - drones[0];
  const Vec2 v = drones[2] - drones[0];
  const double scale = std::max({norm2(u), norm2(v), distance2(drones[1], drones[2])});
  if (std::abs(cross(u, v)) <= 1e-9 * scale) {
    throw std::invalid_argument("tdoa: collinear drones");
  }
}

}  // namespace detail

/// Noisy range differences to the two non-reference drones, in drone-index
/// order. Noise is Normal(0, sigma^2) truncated at 6 sigma.
template <class Rng>
std::array<TdoaMeasurement, 2> generate_tdoa(const Vec2& user, std::span<const Vec2, 3> drones,
                                             int reference, double sigma, Rng& rng) {
  detail::require_distinct(drones);
  if (reference < 0 || reference > 2) throw std::invalid_argument("tdoa: bad reference index");
  if (!(sigma >= 0.0)) throw std::invalid_argument("tdoa: sigma must be >= 0");
  std::array<TdoaMeasurement, 2> out;
  std::normal_distribution<double> noise(0.0, sigma > 0.0 ? sigma : 1.0);
  int slot = 0;
  for (int k = 0; k < 3; ++k) {
    if (k == reference) continue;
    double eps = 0.0;
    if (sigma > 0.0) {
      do {
        eps = noise(rng);
      } while (std::abs(eps) > 6.0 * sigma);
    }
    const double exact = distance(user, drones[k]) - distance(user, drones[reference]);
    out[slot++] = {reference, k, exact + eps, sigma};
  }
  return out;
}

/// A range difference with explicit anchor positions, so fixes can combine
/// measurements taken while the formation moves.
struct RangeDifference {
  Vec2 reference;
  Vec2 other;
  double delta_range = 0.0;
};

inline std::vector<RangeDifference> to_range_differences(
    std::span<const TdoaMeasurement> measurements, std::span<const Vec2, 3> drones) {
  std::vector<RangeDifference> out;
  out.reserve(measurements.size());
  for (const auto& m : measurements) {
    out.push_back({drones[m.reference_drone], drones[m.other_drone], m.delta_range});
  }
  return out;
}

inline double residual_norm(std::span<const RangeDifference> rows, const Vec2& p) {
  double acc = 0.0;
  for (const auto& r : rows) {
    const double e = distance(p, r.other) - distance(p, r.reference) - r.delta_range;
    acc += e * e;
  }
  return std::sqrt(acc);
}

struct TdoaFix {
  Vec2 position;
  int iterations = 0;
  bool converged = false;
  double residual_norm = 0.0;
};

inline constexpr int kTdoaMaxIterations = 50;
inline constexpr double kTdoaStepTolerance = 1e-6;

/// Gauss-Newton on the squared hyperbolic residuals, with step halving when
/// a full step would increase the residual.
inline TdoaFix solve_range_differences(std::span<const RangeDifference> rows,
                                       const Vec2& initial_guess) {
  auto unit_from = [](const Vec2& p, const Vec2& anchor) {
    const double d = distance(p, anchor);
    return d > 0.0 ? (p - anchor) / d : Vec2{};
  };
  TdoaFix fix{initial_guess, 0, false, residual_norm(rows, initial_guess)};
  for (int it = 1; it <= kTdoaMaxIterations; ++it) {
    fix.iterations = it;
    // Normal equations J^T J step = -J^T r.
    double a = 0.0, b = 0.0, c = 0.0, gx = 0.0, gy = 0.0;
    for (const auto& r : rows) {
      const Vec2 j = unit_from(fix.position, r.other) - unit_from(fix.position, r.reference);
      const double e =
          distance(fix.position, r.other) - distance(fix.position, r.reference) - r.delta_range;
      a += j.x * j.x;
      b += j.x * j.y;
      c += j.y * j.y;
      gx += j.x * e;
      gy += j.y * e;
    }
    const double det = a * c - b * b;
    if (!(std::abs(det) > 1e-18 * std::max(1.0, a * c))) return fix;
    Vec2 step{-(c * gx - b * gy) / det, -(a * gy - b * gx) / det};
    double next_res = residual_norm(rows, fix.position + step);
    for (int h = 0; h < 30 && next_res > fix.residual_norm; ++h) {
      step *= 0.5;
      next_res = residual_norm(rows, fix.position + step);
    }
    if (next_res <= fix.residual_norm) {
      fix.position += step;
      fix.residual_norm = next_res;
    }
    if (norm(step) < kTdoaStepTolerance) {
      fix.converged = true;
      return fix;
    }
  }
  return fix;
}

/// Position from the two range differences of one formation snapshot,
/// starting at `initial_guess` (the fleet centroid when omitted).
inline TdoaFix solve_tdoa(std::span<const TdoaMeasurement> measurements,
                          std::span<const Vec2, 3> drones,
                          std::optional<Vec2> initial_guess = std::nullopt) {
  detail::require_not_collinear(drones);
  if (measurements.size() < 2) throw std::invalid_argument("tdoa: need two measurements");
  const Vec2 start = initial_guess.value_or((drones[0] + drones[1] + drones[2]) / 3.0);
  if (!is_finite(start)) throw std::invalid_argument("tdoa: non-finite initial guess");
  const auto rows = to_range_differences(measurements, drones);
  return solve_range_differences(rows, start);
}

/// Closed-form solutions of one snapshot's two range differences (zero,
/// one, or two points). Outside the formation triangle two distinct
/// positions can reproduce the same pair of differences exactly.
inline std::vector<Vec2> tdoa_candidates(const std::array<TdoaMeasurement, 2>& measurements,
                                         std::span<const Vec2, 3> drones) {
  detail::require_not_collinear(drones);
  const int ref = measurements[0].reference_drone;
  const Vec2 o = drones[ref];
  // Work relative to the reference: |p| = r, |p - q_k| = r + delta_k gives
  // 2 q_k . p = |q_k|^2 - delta_k^2 - 2 r delta_k, linear in p for fixed r.
  const Vec2 q0 = drones[measurements[0].other_drone] - o;
  const Vec2 q1 = drones[measurements[1].other_drone] - o;
  const double d0 = measurements[0].delta_range;
  const double d1 = measurements[1].delta_range;
  const double det = 4.0 * cross(q0, q1);
  auto solve2 = [&](double b0, double b1) {
    // [2 q0; 2 q1] p = [b0; b1]
    return Vec2{(b0 * 2.0 * q1.y - b1 * 2.0 * q0.y) / det,
                (2.0 * q0.x * b1 - 2.0 * q1.x * b0) / det};
  };
  const Vec2 base = solve2(norm2(q0) - d0 * d0, norm2(q1) - d1 * d1);
  const Vec2 slope = solve2(-2.0 * d0, -2.0 * d1);
  // |base + r slope|^2 = r^2
  const double qa = norm2(slope) - 1.0;
  const double qb = 2.0 * dot(base, slope);
  const double qc = norm2(base);
  std::vector<double> radii;
  if (std::abs(qa) < 1e-12) {
    if (qb != 0.0) radii.push_back(-qc / qb);
  } else {
    const double disc = qb * qb - 4.0 * qa * qc;
    if (disc >= 0.0) {
      const double s = std::sqrt(disc);
      radii.push_back((-qb + s) / (2.0 * qa));
      if (s > 0.0) radii.push_back((-qb - s) / (2.0 * qa));
    }
  }
  std::vector<Vec2> out;
  for (double r : radii) {
    const double slack = 1e-9 * std::max(1.0, std::abs(r));
    if (r < -slack || r + d0 < -slack || r + d1 < -slack) continue;
    out.push_back(o + base + slope * r);
  }
  return out;
}

/// Drone positions and measurements from one formation snapshot.
struct TdoaEpoch {
  std::array<Vec2, 3> drones;
  std::array<TdoaMeasurement, 2> measurements;
};

struct MultiEpochFix {
  TdoaFix fix;
  /// More than one position explains the measurements equally well.
  bool ambiguous = false;
};

/// Fix from one or more snapshots. Every closed-form solution of every
/// snapshot (plus the first centroid) seeds a joint Gauss-Newton over all
/// range differences; the lowest joint residual wins. Candidates must lie in
/// the first snapshot's overlapped coverage (grown by `slack`).
inline MultiEpochFix resolve_epochs(std::span<const TdoaEpoch> epochs, double rc, double slack) {
  if (epochs.empty()) throw std::invalid_argument("resolve_epochs: no epochs");
  std::vector<RangeDifference> rows;
  std::vector<Vec2> seeds;
  for (const auto& e : epochs) {
    const auto r = to_range_differences(e.measurements, e.drones);
    rows.insert(rows.end(), r.begin(), r.end());
    const auto c = tdoa_candidates(e.measurements, e.drones);
    seeds.insert(seeds.end(), c.begin(), c.end());
  }
  const auto& first = epochs.front().drones;
  seeds.push_back((first[0] + first[1] + first[2]) / 3.0);

  std::vector<TdoaFix> fixes;
  for (const Vec2& s : seeds) {
    TdoaFix f = solve_range_differences(rows, s);
    if (!f.converged || !in_overlap(first, rc + slack, f.position)) continue;
    fixes.push_back(f);
  }
  MultiEpochFix out;
  if (fixes.empty()) {
    out.fix = solve_range_differences(rows, seeds.back());
    out.fix.converged = false;
    return out;
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < fixes.size(); ++i) {
    if (fixes[i].residual_norm < fixes[best].residual_norm) best = i;
  }
  out.fix = fixes[best];
  // A distinct fix with a comparable residual means the data cannot tell
  // the two apart.
  const double tie = 1e-6 + 1e-3 * fixes[best].residual_norm;
  for (const auto& f : fixes) {
    if (distance(f.position, out.fix.position) > 1e-3 &&
        f.residual_norm <= fixes[best].residual_norm + tie) {
      out.ambiguous = true;
    }
  }
  return out;
}

/// Bounded-error estimate: the center is the truth displaced uniformly
/// within a disk of radius r_e.
template <class Rng>
EstimateDisk make_estimate_disk(const UserTruth& user, double r_e, Rng& rng) {
  if (!(r_e >= 0.0)) throw std::invalid_argument("estimate disk: r_e must be >= 0");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double radius = r_e * std::sqrt(unit(rng));
  const double angle = 2.0 * std::numbers::pi * unit(rng);
  Vec2 offset = unit_vector(angle) * radius;
  // Rounding in cos/sin may push the offset a hair past r_e.
  if (const double len = norm(offset); len > r_e) offset *= r_e / len;
  return {user.id, user.position + offset, r_e};
}

}  // namespace dronebs
