#pragma once

// CSV writers. Every file starts with a fixed header line; numbers are
// printed with fixed formats so equal inputs give byte-identical output.

#include <cstdarg>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "dronebs/deployment_optimizer.hpp"
#include "dronebs/localization.hpp"
#include "dronebs/simulation.hpp"
#include "dronebs/sweep_planner.hpp"

namespace dronebs::io {

inline constexpr const char* kMetricsHeader =
    "algorithm,lambda_u_per_km2,r_e_m,seed,n_users,detected,served,sweep_completed,elapsed_s";
inline constexpr const char* kEstimatesHeader = "user_id,center_x_m,center_y_m,r_e_m";
inline constexpr const char* kDeploymentHeader = "drone_index,x_m,y_m,covered_count";
inline constexpr const char* kDecompositionHeader =
    "sub_area,vertex,x_m,y_m,area_m2,sweep_direction_rad";
inline constexpr const char* kWaypointsHeader = "fleet_id,x_m,y_m";
inline constexpr const char* kCurvesHeader =
    "algorithm,lambda_u_per_km2,r_e_m,replications,mean_served,stderr_served";
inline constexpr const char* kTraceHeader = "tick,drone_id,x_m,y_m";

/// printf-style formatting into a std::string.
#if defined(__GNUC__)
__attribute__((format(printf, 1, 2)))
#endif
inline std::string format(const char* fmt, ...) {
  std::va_list args;
  va_start(args, fmt);
  std::va_list again;
  va_copy(again, args);
  const int n = std::vsnprintf(nullptr, 0, fmt, args);
  va_end(args);
  std::string out(static_cast<std::size_t>(n) + 1, '\0');
  std::vsnprintf(out.data(), out.size(), fmt, again);
  va_end(again);
  out.resize(static_cast<std::size_t>(n));
  return out;
}

inline void write_metrics(std::ostream& os, const std::vector<MetricsRow>& rows) {
  os << kMetricsHeader << '\n';
  for (const auto& r : rows) {
    os << format("%s,%.6g,%.6g,%llu,%d,%d,%d,%d,%.3f\n", r.algorithm.c_str(), r.lambda_u_per_km2,
                 r.r_e, static_cast<unsigned long long>(r.seed), r.n_users, r.detected, r.served,
                 r.sweep_completed ? 1 : 0, r.elapsed);
  }
}

inline void write_estimates(std::ostream& os, const std::vector<EstimateDisk>& estimates) {
  os << kEstimatesHeader << '\n';
  for (const auto& e : estimates) {
    os << format("%d,%.6f,%.6f,%.6g\n", e.user_id, e.center.x, e.center.y, e.radius_re);
  }
}

inline void write_deployment(std::ostream& os, const DeploymentPlan& plan) {
  os << kDeploymentHeader << '\n';
  for (std::size_t i = 0; i < plan.placements.size(); ++i) {
    const auto& p = plan.placements[i];
    os << format("%zu,%.6f,%.6f,%zu\n", i, p.center.x, p.center.y, p.covered_ids.size());
  }
}

inline void write_decomposition(std::ostream& os, const Decomposition& dec) {
  os << kDecompositionHeader << '\n';
  for (std::size_t k = 0; k < dec.sub_areas.size(); ++k) {
    const auto& poly = dec.sub_areas[k];
    for (std::size_t v = 0; v < poly.size(); ++v) {
      os << format("%zu,%zu,%.6f,%.6f,%.6f,%.9f\n", k, v, poly.vertices()[v].x,
                   poly.vertices()[v].y, poly.area(), dec.sweep_direction);
    }
  }
}

inline void write_waypoints(std::ostream& os, const SweepPlan& plan) {
  os << kWaypointsHeader << '\n';
  for (const auto& f : plan.fleets) {
    for (const Vec2& w : f.path.waypoints) os << format("%d,%.6f,%.6f\n", f.fleet_id, w.x, w.y);
  }
}

inline void write_curves(std::ostream& os, const std::vector<CurvePoint>& curves) {
  os << kCurvesHeader << '\n';
  for (const auto& c : curves) {
    os << format("%s,%.6g,%.6g,%d,%.12f,%.12f\n", c.algorithm.c_str(), c.lambda_u_per_km2, c.r_e,
                 c.replications, c.mean_served, c.stderr_served);
  }
}

inline void write_trace(std::ostream& os, const std::vector<TraceRow>& rows) {
  os << kTraceHeader << '\n';
  for (const auto& r : rows) {
    os << format("%ld,%d,%.3f,%.3f\n", r.tick, r.drone_id, r.position.x, r.position.y);
  }
}

}  // namespace dronebs::io
