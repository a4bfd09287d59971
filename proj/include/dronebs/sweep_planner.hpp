#pragma once

// Area decomposition into proportional slices, optimal sweep direction,
// and per-fleet boustrophedon (zigzag) lane paths.

#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dronebs/geometry.hpp"

namespace dronebs {

/// Fleets of three drones available from `m` drones.
inline int fleet_count(int m) {
  if (m < 3 || m % 3 != 0) {
    throw std::invalid_argument("drone count m must be a positive multiple of 3");
  }
  return m / 3;
}

struct DecompositionRequest {
  ConvexPolygon polygon;
  std::vector<double> proportions;
};

inline void validate_proportions(const std::vector<double>& proportions) {
  if (proportions.empty()) throw std::invalid_argument("proportions: need at least one");
  double sum = 0.0;
  for (double p : proportions) {
    if (!(p > 0.0)) throw std::invalid_argument("proportions: every entry must be > 0");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument("proportions: must sum to 1 (got " + std::to_string(sum) + ")");
  }
}

inline void validate(const DecompositionRequest& req) { validate_proportions(req.proportions); }

struct Decomposition {
  std::vector<ConvexPolygon> sub_areas;
  /// Lane direction in [0, pi); divide lines run parallel to it.
  double sweep_direction = 0.0;
  /// Axis the polygon is sliced along (the minimum-width direction).
  double slicing_direction = 0.0;
};

/// Angle in [0, pi) minimizing polygon_width. The minimum width of a convex
/// polygon is attained along some edge normal, so only those are scanned.
/// Ties (within kGeomTol) go to the smallest angle.
inline double min_width_direction(const ConvexPolygon& poly) {
  const auto& v = poly.vertices();
  double best_angle = 0.0;
  double best_width = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0, n = v.size(); i < n; ++i) {
    const Vec2 edge = v[(i + 1) % n] - v[i];
    double angle = std::atan2(-edge.x, edge.y);
    angle = std::fmod(angle, std::numbers::pi);
    if (angle < 0.0) angle += std::numbers::pi;
    if (angle >= std::numbers::pi - 1e-12) angle = 0.0;
    const double w = polygon_width(poly, angle);
    if (w < best_width - kGeomTol ||
        (std::abs(w - best_width) <= kGeomTol && angle < best_angle)) {
      best_width = std::min(best_width, w);
      best_angle = angle;
    }
  }
  return best_angle;
}

namespace detail {

inline double area_below(const ConvexPolygon& poly, const Vec2& axis, double offset) {
  const auto ring = clip_half_plane(poly.vertices(), axis, offset);
  return ring.size() < 3 ? 0.0 : signed_area(ring);
}

/// Offset t along `axis` such that the part of `poly` with dot(p, axis) <= t
/// has area `target`. Area is monotone in t, so bisection to machine
/// precision is exact enough.
inline double solve_cut(const ConvexPolygon& poly, const Vec2& axis, double lo, double hi,
                        double target) {
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (area_below(poly, axis, mid) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

/// Slices the polygon with lines parallel to the sweep direction so that the
/// slice areas follow the requested proportions, in order along the slicing
/// axis.
inline Decomposition decompose(const DecompositionRequest& req) {
  validate(req);
  const ConvexPolygon& poly = req.polygon;
  Decomposition out;
  out.slicing_direction = min_width_direction(poly);
  out.sweep_direction = out.slicing_direction + std::numbers::pi / 2.0;
  if (out.sweep_direction >= std::numbers::pi) out.sweep_direction -= std::numbers::pi;

  const Vec2 axis = unit_vector(out.slicing_direction);
  const auto [lo, hi] = poly.project(axis);
  const double total = poly.area();

  std::vector<double> cuts;
  cuts.push_back(lo);
  double cumulative = 0.0;
  for (std::size_t k = 0; k + 1 < req.proportions.size(); ++k) {
    cumulative += req.proportions[k];
    cuts.push_back(detail::solve_cut(poly, axis, cuts.back(), hi, cumulative * total));
  }
  cuts.push_back(hi);

  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    std::vector<Vec2> ring = poly.vertices();
    if (k + 2 < cuts.size()) ring = clip_half_plane(ring, axis, cuts[k + 1]);
    if (k > 0) ring = clip_half_plane(ring, -axis, -cuts[k]);
    try {
      out.sub_areas.emplace_back(std::move(ring));
    } catch (const std::invalid_argument&) {
      throw std::invalid_argument("decompose: sub-area " + std::to_string(k) +
                                  " is degenerate (proportion too small for the polygon)");
    }
  }
  return out;
}

/// Lanes needed to sweep a strip of width `width` with footprint radius rho.
inline int lane_count(double width, double rho) {
  if (width <= 2.0 * rho) return 1;
  // The slack keeps exact multiples (up to rounding) from gaining a lane.
  return static_cast<int>(std::ceil((width - 2.0 * rho) / (2.0 * rho) - 1e-9)) + 1;
}

struct ZigzagPath {
  std::vector<Vec2> waypoints;
  int lane_count = 0;
  /// Separation of consecutive lane centerlines (0 for a single lane).
  double lane_spacing = 0.0;
  double length = 0.0;
};

inline double polyline_length(const std::vector<Vec2>& pts) {
  double len = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) len += distance(pts[i - 1], pts[i]);
  return len;
}

/// Boustrophedon path over `sub_area` with lanes parallel to
/// `sweep_direction`.
///
/// Lane centerlines are evenly spaced, the outer two sitting rho inside the
/// extreme supporting lines, so spacing never exceeds 2 * rho. Each lane
/// spans both its chord overshot by rho at each end and the along-track
/// extent of the polygon strip it is responsible for (half the spacing on
/// either side), which makes every point of the sub-area lie within rho of
/// some lane even next to edges nearly parallel to the lanes.
inline ZigzagPath zigzag_path(const ConvexPolygon& sub_area, double sweep_direction, double rho,
                              const Vec2& entry_corner) {
  if (!(rho > 0.0)) throw std::invalid_argument("zigzag_path: footprint radius must be > 0");
  const Vec2 along = unit_vector(sweep_direction);
  const Vec2 across = perp(along);
  const auto [a, b] = sub_area.project(across);
  const double width = b - a;

  ZigzagPath path;
  path.lane_count = lane_count(width, rho);
  std::vector<double> offsets;
  if (path.lane_count == 1) {
    offsets.push_back(0.5 * (a + b));
  } else {
    path.lane_spacing = (width - 2.0 * rho) / (path.lane_count - 1);
    for (int k = 0; k < path.lane_count; ++k) offsets.push_back(a + rho + path.lane_spacing * k);
    offsets.back() = b - rho;
  }

  struct Lane {
    Vec2 lo, hi;
  };
  std::vector<Lane> lanes;
  const auto& ring = sub_area.vertices();
  for (std::size_t k = 0; k < offsets.size(); ++k) {
    const double c = offsets[k];
    // Chord of the centerline.
    double chord_lo = std::numeric_limits<double>::infinity();
    double chord_hi = -chord_lo;
    for (std::size_t i = 0, n = ring.size(); i < n; ++i) {
      const Vec2& p = ring[i];
      const Vec2& q = ring[(i + 1) % n];
      const double dp = dot(p, across) - c;
      const double dq = dot(q, across) - c;
      if ((dp > 0.0 && dq > 0.0) || (dp < 0.0 && dq < 0.0)) continue;
      // An edge lying on the centerline contributes both endpoints.
      const Vec2 x0 = dp == dq ? p : p + (q - p) * (dp / (dp - dq));
      const Vec2 x1 = dp == dq ? q : x0;
      chord_lo = std::min({chord_lo, dot(x0, along), dot(x1, along)});
      chord_hi = std::max({chord_hi, dot(x0, along), dot(x1, along)});
    }
    // Along-track extent of the strip this lane is responsible for.
    const double band_lo = k == 0 ? a : 0.5 * (offsets[k - 1] + c);
    const double band_hi = k + 1 == offsets.size() ? b : 0.5 * (c + offsets[k + 1]);
    auto strip = clip_half_plane(ring, across, band_hi);
    strip = clip_half_plane(strip, -across, -band_lo);
    double lo = chord_lo - rho;
    double hi = chord_hi + rho;
    for (const Vec2& x : strip) {
      lo = std::min(lo, dot(x, along));
      hi = std::max(hi, dot(x, along));
    }
    lanes.push_back({across * c + along * lo, across * c + along * hi});
  }

  // Start from the lane end nearest the entry corner.
  const std::array<Vec2, 4> ends = {lanes.front().lo, lanes.front().hi, lanes.back().lo,
                                    lanes.back().hi};
  std::size_t nearest = 0;
  for (std::size_t i = 1; i < ends.size(); ++i) {
    if (distance2(ends[i], entry_corner) < distance2(ends[nearest], entry_corner)) nearest = i;
  }
  if (nearest >= 2) std::reverse(lanes.begin(), lanes.end());
  bool forward = nearest % 2 == 0;
  for (const Lane& lane : lanes) {
    path.waypoints.push_back(forward ? lane.lo : lane.hi);
    path.waypoints.push_back(forward ? lane.hi : lane.lo);
    forward = !forward;
  }
  path.length = polyline_length(path.waypoints);
  return path;
}

struct FleetPlan {
  int fleet_id = 0;
  ConvexPolygon sub_area;
  FleetGeometry formation;
  double footprint_radius = 0.0;
  ZigzagPath path;
  double estimated_duration = 0.0;
};

struct SweepPlan {
  Decomposition decomposition;
  std::vector<FleetPlan> fleets;
  /// Set when the operating area is under 10x the fleets' combined
  /// overlapped coverage area.
  bool scale_warning = false;
};

/// One zigzag plan per fleet. Fleets take sub-areas in slicing order.
inline SweepPlan plan_sweep(const ConvexPolygon& polygon, const std::vector<double>& proportions,
                            const std::vector<FleetGeometry>& fleets, double speed) {
  if (fleets.size() != proportions.size()) {
    throw std::invalid_argument("plan_sweep: fleet count (" + std::to_string(fleets.size()) +
                                ") != proportion count (" + std::to_string(proportions.size()) +
                                ")");
  }
  if (!(speed > 0.0)) throw std::invalid_argument("plan_sweep: speed must be > 0");
  for (const auto& fg : fleets) validate(fg);

  SweepPlan plan;
  plan.decomposition = decompose({polygon, proportions});
  double footprint_area = 0.0;
  for (std::size_t i = 0; i < fleets.size(); ++i) {
    const ConvexPolygon& sub = plan.decomposition.sub_areas[i];
    Vec2 entry = sub.vertices().front();
    for (const Vec2& v : sub.vertices()) {
      if (lex_less(v, entry)) entry = v;
    }
    FleetGeometry fg = fleets[i];
    const double rho = guaranteed_footprint(fg).radius;
    ZigzagPath path = zigzag_path(sub, plan.decomposition.sweep_direction, rho, entry);
    fg.centroid = path.waypoints.front();
    const double duration = path.length / speed;
    plan.fleets.push_back({static_cast<int>(i), sub, fg, rho, std::move(path), duration});
    footprint_area += overlap_area(fleets[i].side_d, fleets[i].coverage_radius);
  }
  plan.scale_warning = polygon.area() < 10.0 * footprint_area;
  return plan;
}

/// Plain-text waypoint listing: one `fleet_id x_m y_m` triple per line.
inline void write_waypoints_text(std::ostream& os, const SweepPlan& plan) {
  char buf[96];
  for (const auto& fleet : plan.fleets) {
    for (const Vec2& w : fleet.path.waypoints) {
      std::snprintf(buf, sizeof buf, "%d %.6f %.6f\n", fleet.fleet_id, w.x, w.y);
      os << buf;
    }
  }
}

}  // namespace dronebs
