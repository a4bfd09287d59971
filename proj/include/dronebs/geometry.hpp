#pragma once

// Planar primitives: vectors, convex polygons, disks, and the rigid
// three-drone formation with its overlapped coverage area.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dronebs {

/// Absolute slack, in meters, used by every geometric predicate.
inline constexpr double kGeomTol = 1e-9;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
  constexpr Vec2& operator-=(const Vec2& o) { x -= o.x; y -= o.y; return *this; }
  constexpr Vec2& operator*=(double s) { x *= s; y *= s; return *this; }

  friend constexpr Vec2 operator+(Vec2 a, const Vec2& b) { return a += b; }
  friend constexpr Vec2 operator-(Vec2 a, const Vec2& b) { return a -= b; }
  friend constexpr Vec2 operator*(Vec2 a, double s) { return a *= s; }
  friend constexpr Vec2 operator*(double s, Vec2 a) { return a *= s; }
  friend constexpr Vec2 operator/(Vec2 a, double s) { return Vec2{a.x / s, a.y / s}; }
  friend constexpr Vec2 operator-(const Vec2& a) { return Vec2{-a.x, -a.y}; }
  friend constexpr bool operator==(const Vec2&, const Vec2&) = default;
};

constexpr double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }
inline double norm(const Vec2& a) { return std::hypot(a.x, a.y); }
constexpr double norm2(const Vec2& a) { return dot(a, a); }
inline double distance(const Vec2& a, const Vec2& b) { return norm(a - b); }
constexpr double distance2(const Vec2& a, const Vec2& b) { return norm2(a - b); }
inline Vec2 unit_vector(double angle) { return {std::cos(angle), std::sin(angle)}; }
/// Counter-clockwise perpendicular.
constexpr Vec2 perp(const Vec2& a) { return {-a.y, a.x}; }
inline bool is_finite(const Vec2& a) { return std::isfinite(a.x) && std::isfinite(a.y); }

/// Lexicographic (x, then y) ordering.
constexpr bool lex_less(const Vec2& a, const Vec2& b) {
  return a.x < b.x || (a.x == b.x && a.y < b.y);
}

struct Disk {
  Vec2 center;
  double radius = 0.0;
};

/// Closed membership with kGeomTol slack.
inline bool disk_contains(const Disk& disk, const Vec2& p) {
  const double r = disk.radius + kGeomTol;
  return distance2(p, disk.center) <= r * r;
}

/// Distance from p to the closed segment [a, b].
inline double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = norm2(ab);
  if (len2 == 0.0) return distance(p, a);
  const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  return distance(p, a + ab * t);
}

/// Shoelace signed area; positive for counter-clockwise rings.
inline double signed_area(std::span<const Vec2> ring) {
  double twice = 0.0;
  for (std::size_t i = 0, n = ring.size(); i < n; ++i) {
    twice += cross(ring[i], ring[(i + 1) % n]);
  }
  return 0.5 * twice;
}

/// Strictly convex, counter-clockwise polygon. Construction normalizes
/// orientation, drops duplicate and collinear vertices (within kGeomTol),
/// and throws std::invalid_argument if the result is not a valid convex
/// polygon with positive area.
class ConvexPolygon {
 public:
  explicit ConvexPolygon(std::vector<Vec2> vertices) : vertices_(std::move(vertices)) {
    for (const auto& v : vertices_) {
      if (!is_finite(v)) throw std::invalid_argument("polygon vertex is not finite");
    }
    if (signed_area(vertices_) < 0.0) std::reverse(vertices_.begin(), vertices_.end());
    simplify();
    if (vertices_.size() < 3) {
      throw std::invalid_argument("polygon needs at least 3 non-collinear vertices");
    }
    const std::size_t n = vertices_.size();
    double turning = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2& a = vertices_[i];
      const Vec2& b = vertices_[(i + 1) % n];
      const Vec2& c = vertices_[(i + 2) % n];
      if (cross(b - a, c - b) <= 0.0) throw std::invalid_argument("polygon is not convex");
      turning += std::atan2(cross(b - a, c - b), dot(b - a, c - b));
    }
    // All left turns but winding more than once is a self-intersecting star.
    if (turning > 2.0 * std::numbers::pi + 1e-6) {
      throw std::invalid_argument("polygon is not convex");
    }
    area_ = signed_area(vertices_);
    if (!(area_ > 0.0)) throw std::invalid_argument("polygon has zero area");
  }

  static ConvexPolygon rectangle(double x0, double y0, double x1, double y1) {
    return ConvexPolygon({{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}});
  }

  const std::vector<Vec2>& vertices() const { return vertices_; }
  std::size_t size() const { return vertices_.size(); }
  double area() const { return area_; }

  Vec2 centroid() const {
    Vec2 acc;
    double twice = 0.0;
    const std::size_t n = vertices_.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2& a = vertices_[i];
      const Vec2& b = vertices_[(i + 1) % n];
      const double w = cross(a, b);
      twice += w;
      acc += (a + b) * w;
    }
    return acc / (3.0 * twice);
  }

  /// Axis-aligned bounding box as {min, max}.
  std::array<Vec2, 2> bounds() const {
    Vec2 lo = vertices_.front();
    Vec2 hi = lo;
    for (const auto& v : vertices_) {
      lo = {std::min(lo.x, v.x), std::min(lo.y, v.y)};
      hi = {std::max(hi.x, v.x), std::max(hi.y, v.y)};
    }
    return {lo, hi};
  }

  /// {min, max} of dot(vertex, axis).
  std::array<double, 2> project(const Vec2& axis) const {
    double lo = dot(vertices_.front(), axis);
    double hi = lo;
    for (const auto& v : vertices_) {
      const double t = dot(v, axis);
      lo = std::min(lo, t);
      hi = std::max(hi, t);
    }
    return {lo, hi};
  }

 private:
  void simplify() {
    bool changed = true;
    while (changed && vertices_.size() >= 3) {
      changed = false;
      const std::size_t n = vertices_.size();
      for (std::size_t i = 0; i < n; ++i) {
        const Vec2& prev = vertices_[(i + n - 1) % n];
        const Vec2& cur = vertices_[i];
        const Vec2& next = vertices_[(i + 1) % n];
        const bool duplicate = distance(prev, cur) <= kGeomTol;
        const double base = distance(prev, next);
        // Height of cur over the chord prev->next.
        const bool collinear =
            base > kGeomTol && std::abs(cross(next - prev, cur - prev)) / base <= kGeomTol &&
            dot(cur - prev, next - cur) >= 0.0;
        if (duplicate || collinear || base <= kGeomTol) {
          vertices_.erase(vertices_.begin() + static_cast<std::ptrdiff_t>(i));
          changed = true;
          break;
        }
      }
    }
  }

  std::vector<Vec2> vertices_;
  double area_ = 0.0;
};

/// Closed membership with kGeomTol slack.
inline bool contains(const ConvexPolygon& poly, const Vec2& p) {
  const auto& v = poly.vertices();
  for (std::size_t i = 0, n = v.size(); i < n; ++i) {
    const Vec2 edge = v[(i + 1) % n] - v[i];
    // Signed distance of p to the left of the edge.
    if (cross(edge, p - v[i]) / norm(edge) < -kGeomTol) return false;
  }
  return true;
}

/// Distance from p to the polygon boundary.
inline double boundary_distance(const ConvexPolygon& poly, const Vec2& p) {
  const auto& v = poly.vertices();
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0, n = v.size(); i < n; ++i) {
    best = std::min(best, point_segment_distance(p, v[i], v[(i + 1) % n]));
  }
  return best;
}

/// Extent of the polygon's projection onto the axis at angle `direction`.
inline double polygon_width(const ConvexPolygon& poly, double direction) {
  const auto [lo, hi] = poly.project(unit_vector(direction));
  return hi - lo;
}

/// Keeps the part of `ring` with dot(p, normal) <= offset. Input must be
/// convex; output is convex (possibly empty or degenerate).
inline std::vector<Vec2> clip_half_plane(std::span<const Vec2> ring, const Vec2& normal,
                                         double offset) {
  std::vector<Vec2> out;
  const std::size_t n = ring.size();
  out.reserve(n + 1);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = ring[i];
    const Vec2& b = ring[(i + 1) % n];
    const double da = dot(a, normal) - offset;
    const double db = dot(b, normal) - offset;
    if (da <= 0.0) out.push_back(a);
    if ((da < 0.0 && db > 0.0) || (da > 0.0 && db < 0.0)) {
      const double t = da / (da - db);
      out.push_back(a + (b - a) * t);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Fleet formation

/// Overlapped area of three radius-`rc` disks centered on an equilateral
/// triangle of side `d`. Valid for 0 <= d <= sqrt(3) * rc.
inline double overlap_area(double d, double rc) {
  if (!(rc > 0.0)) throw std::domain_error("overlap_area: coverage radius must be positive");
  if (!(d >= 0.0)) throw std::domain_error("overlap_area: mutual distance must be non-negative");
  if (d > std::sqrt(3.0) * rc) {
    throw std::domain_error("overlap_area: mutual distance exceeds sqrt(3) * coverage radius");
  }
  const double alpha = std::acos(d / (2.0 * rc));
  const double a = rc * rc * (3.0 * alpha - std::numbers::pi / 2.0) -
                   1.5 * d * std::sqrt(std::max(0.0, rc * rc - d * d / 4.0)) +
                   std::sqrt(3.0) / 4.0 * d * d;
  return std::clamp(a, 0.0, std::numbers::pi * rc * rc);
}

struct FleetGeometry {
  Vec2 centroid;
  double heading = 0.0;
  double side_d = 0.0;
  double coverage_radius = 0.0;
};

inline void validate(const FleetGeometry& fg) {
  if (!is_finite(fg.centroid) || !std::isfinite(fg.heading)) {
    throw std::invalid_argument("fleet geometry: non-finite centroid or heading");
  }
  if (!(fg.coverage_radius > 0.0)) {
    throw std::invalid_argument("fleet geometry: coverage radius must be positive");
  }
  if (!(fg.side_d >= 0.0) || !(fg.side_d < std::sqrt(3.0) * fg.coverage_radius)) {
    throw std::invalid_argument("fleet geometry: need 0 <= d < sqrt(3) * Rc");
  }
}

/// Drone positions of the formation; index 0 leads along the heading,
/// indices 1 and 2 follow counter-clockwise.
inline std::array<Vec2, 3> fleet_drone_positions(const FleetGeometry& fg) {
  const double circumradius = fg.side_d / std::sqrt(3.0);
  std::array<Vec2, 3> out;
  for (int k = 0; k < 3; ++k) {
    out[k] = fg.centroid +
             unit_vector(fg.heading + 2.0 * std::numbers::pi * k / 3.0) * circumradius;
  }
  return out;
}

/// Disk around the centroid lying inside all three coverage disks.
inline Disk guaranteed_footprint(const FleetGeometry& fg) {
  return {fg.centroid, std::max(0.0, fg.coverage_radius - fg.side_d / std::sqrt(3.0))};
}

/// True when p is inside every coverage disk of the formation.
inline bool in_overlap(std::span<const Vec2, 3> drones, double rc, const Vec2& p) {
  return std::all_of(drones.begin(), drones.end(),
                     [&](const Vec2& q) { return disk_contains({q, rc}, p); });
}

}  // namespace dronebs
