#pragma once

// Pairwise drone collision avoidance by closest point of approach (CPA).

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "dronebs/geometry.hpp"

namespace dronebs {

struct DroneState {
  int id = 0;
  Vec2 position;
  Vec2 velocity;
  /// Drones sharing a non-negative group (a rigid formation) are never
  /// checked against each other.
  int group = -1;
};

struct EncounterGeometry {
  /// l = p_B - p_A
  Vec2 relative_distance;
  /// c = v_B - v_A
  Vec2 relative_velocity;
  /// l_p = l + c * tau, the separation vector (A to B) at closest approach.
  Vec2 pass_vector;
  double time_to_cpa = 0.0;
  double pass_distance = 0.0;
  /// |l_p| - d_safe; negative predicts a violation.
  double margin = 0.0;
  /// Already moving apart (tau <= 0).
  bool separating = false;
  /// No relative motion; pass distance is the current distance.
  bool static_relative = false;

  bool threatening() const { return !static_relative && !separating && margin < 0.0; }
};

/// Relative speeds below this (m/s) count as no relative motion; rounding in
/// headings otherwise turns parallel flight into a far-future head-on.
inline constexpr double kRelativeSpeedTol = 1e-9;

inline EncounterGeometry encounter(const DroneState& a, const DroneState& b, double d_safe) {
  if (!(d_safe > 0.0)) throw std::invalid_argument("encounter: d_safe must be > 0");
  EncounterGeometry g;
  g.relative_distance = b.position - a.position;
  g.relative_velocity = b.velocity - a.velocity;
  const double cc = norm2(g.relative_velocity);
  if (cc <= kRelativeSpeedTol * kRelativeSpeedTol) {
    g.static_relative = true;
    g.pass_vector = g.relative_distance;
  } else {
    g.time_to_cpa = -dot(g.relative_distance, g.relative_velocity) / cc;
    g.pass_vector = g.relative_distance + g.relative_velocity * g.time_to_cpa;
    g.separating = g.time_to_cpa <= 0.0;
  }
  g.pass_distance = norm(g.pass_vector);
  g.margin = g.pass_distance - d_safe;
  return g;
}

struct AvoidanceCommand {
  /// Waypoint offsets U_A, U_B to be flown over the next tau seconds.
  Vec2 displacement_a;
  Vec2 displacement_b;
  /// Lateral parts l_VSA, l_VSB.
  Vec2 lateral_a;
  Vec2 lateral_b;
  bool clamped_a = false;
  bool clamped_b = false;
};

namespace detail {

inline Vec2 clamp_length(Vec2 v, double limit, bool& clamped) {
  const double len = norm(v);
  clamped = len > limit;
  if (clamped) v *= limit / len;
  return v;
}

/// Unit direction from A toward B at closest approach. A perfect head-on
/// pass has l_p = 0; the counter-clockwise perpendicular of c stands in.
inline Vec2 pass_direction(const EncounterGeometry& g) {
  if (g.pass_distance > kGeomTol) return g.pass_vector / g.pass_distance;
  return perp(g.relative_velocity / norm(g.relative_velocity));
}

}  // namespace detail

/// Avoidance displacements for a threatening encounter.
///
/// The pair must open its pass distance to d_safe + target_margin, a total
/// lateral separation of target_margin - margin. That total is split between
/// the drones in proportion to the other drone's speed, and the drones are
/// pushed apart along the pass vector. Each displacement v * tau + lateral
/// is clamped to `control_limit`.
inline AvoidanceCommand avoidance_command(const DroneState& a, const DroneState& b,
                                          const EncounterGeometry& geom, double target_margin,
                                          double control_limit) {
  if (!geom.threatening()) {
    throw std::invalid_argument("avoidance_command: encounter is not threatening");
  }
  if (!(target_margin > 0.0)) throw std::invalid_argument("avoidance_command: l*_margin must be > 0");
  if (!(control_limit > 0.0)) throw std::invalid_argument("avoidance_command: U_l must be > 0");
  const double speed_a = norm(a.velocity);
  const double speed_b = norm(b.velocity);
  if (speed_a + speed_b == 0.0) throw std::invalid_argument("avoidance_command: both drones hover");

  const double opening = target_margin - geom.margin;
  const Vec2 dir = detail::pass_direction(geom);
  AvoidanceCommand cmd;
  cmd.lateral_a = -dir * (opening * speed_b / (speed_a + speed_b));
  cmd.lateral_b = dir * (opening * speed_a / (speed_a + speed_b));
  const double tau = geom.time_to_cpa;
  cmd.displacement_a =
      detail::clamp_length(a.velocity * tau + cmd.lateral_a, control_limit, cmd.clamped_a);
  cmd.displacement_b =
      detail::clamp_length(b.velocity * tau + cmd.lateral_b, control_limit, cmd.clamped_b);
  return cmd;
}

struct AvoidanceParams {
  double d_safe = 20.0;
  /// l*_margin; d_safe / 2 when <= 0.
  double target_margin = 0.0;
  /// U_l; max_speed * tau + d_safe when <= 0.
  double control_limit = 0.0;
  double max_speed = 10.0;

  double resolved_margin() const { return target_margin > 0.0 ? target_margin : d_safe / 2.0; }
  double resolved_limit(double tau) const {
    return control_limit > 0.0 ? control_limit : max_speed * tau + d_safe;
  }
};

struct DroneCommand {
  bool active = false;
  /// Waypoint offset to fly over `horizon` seconds.
  Vec2 displacement;
  /// Sum of lateral parts over all threatening pairs.
  Vec2 lateral;
  /// Earliest closest-approach time among the drone's threats.
  double horizon = 0.0;
  bool clamped = false;
};

/// Pairwise avoidance lifted to a set of drones. Lateral offsets from every
/// threatening pair are summed per drone (pairs in index order); the
/// drone's own motion v * horizon is added once and the result clamped.
inline std::vector<DroneCommand> deconflict(std::span<const DroneState> drones,
                                            const AvoidanceParams& params) {
  std::vector<DroneCommand> out(drones.size());
  const double l_star = params.resolved_margin();
  for (std::size_t i = 0; i < drones.size(); ++i) {
    for (std::size_t j = i + 1; j < drones.size(); ++j) {
      const DroneState& a = drones[i];
      const DroneState& b = drones[j];
      if (a.group >= 0 && a.group == b.group) continue;
      const EncounterGeometry g = encounter(a, b, params.d_safe);
      if (!g.threatening()) continue;
      const AvoidanceCommand cmd =
          avoidance_command(a, b, g, l_star, params.resolved_limit(g.time_to_cpa));
      for (auto [k, lateral] : {std::pair{i, cmd.lateral_a}, std::pair{j, cmd.lateral_b}}) {
        DroneCommand& c = out[k];
        c.horizon = c.active ? std::min(c.horizon, g.time_to_cpa) : g.time_to_cpa;
        c.lateral += lateral;
        c.active = true;
      }
    }
  }
  for (std::size_t k = 0; k < drones.size(); ++k) {
    DroneCommand& c = out[k];
    if (!c.active) continue;
    c.displacement = detail::clamp_length(drones[k].velocity * c.horizon + c.lateral,
                                          params.resolved_limit(c.horizon), c.clamped);
  }
  return out;
}

}  // namespace dronebs
