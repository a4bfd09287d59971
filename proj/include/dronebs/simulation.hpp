#pragma once

// End-to-end experiment engine: Poisson user generation, the two-stage
// proposed algorithm (sweep + localize, then greedy deployment), the
// random-search baseline, and Monte Carlo comparison across densities.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "dronebs/collision_avoidance.hpp"
#include "dronebs/deployment_optimizer.hpp"
#include "dronebs/geometry.hpp"
#include "dronebs/localization.hpp"
#include "dronebs/sweep_planner.hpp"

namespace dronebs {

/// Raised for configurations that violate a documented invariant.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Algorithm { proposed, random_search };

inline const char* to_string(Algorithm a) {
  return a == Algorithm::proposed ? "proposed" : "random_search";
}
inline const char* to_string(EstimateMode m) {
  return m == EstimateMode::abstract_disk ? "abstract" : "tdoa";
}

struct SimConfig {
  ConvexPolygon polygon = ConvexPolygon::rectangle(0.0, 0.0, 2000.0, 2000.0);
  int m = 6;
  double d = 50.0;
  double rc = 250.0;
  double v = 10.0;
  double mission_time = 6000.0;
  double r_e = 0.0;
  /// Users per square meter.
  double user_density = 10e-6;
  double r_s = 5.0;
  double d_safe = 20.0;
  std::vector<double> proportions{0.5, 0.5};
  std::uint64_t seed = 1;
  double tick_dt = 1.0;
  EstimateMode estimate_mode = EstimateMode::abstract_disk;
  Algorithm algorithm = Algorithm::proposed;
  /// Range-difference noise for tdoa mode, meters.
  double tdoa_sigma = 0.0;
  bool avoidance = true;
  /// l*_margin; d_safe / 2 when <= 0.
  double target_margin = 0.0;
  /// U_l; v * tau + d_safe when <= 0.
  double control_limit = 0.0;

  AvoidanceParams avoidance_params() const { return {d_safe, target_margin, control_limit, v}; }
};

/// 2 x 2 km arena scaled so full sweeps finish well inside the budget.
inline SimConfig desk_scale_config() { return SimConfig{}; }

/// Published setting: 6 drones over 10 x 10 km, Rc = 500 m, 100 minutes.
inline SimConfig table3_config() {
  SimConfig c;
  c.polygon = ConvexPolygon::rectangle(0.0, 0.0, 10000.0, 10000.0);
  c.rc = 500.0;
  return c;
}

inline void validate(const SimConfig& c) {
  auto fail = [](const std::string& what) { throw ConfigError(what); };
  if (c.m < 1) fail("m must be >= 1");
  if (c.algorithm == Algorithm::proposed) {
    if (c.m % 3 != 0) fail("m must be divisible by 3 for the proposed algorithm");
    if (static_cast<std::size_t>(c.m / 3) != c.proportions.size()) {
      fail("proportions count must equal the fleet count m/3");
    }
  }
  try {
    validate_proportions(c.proportions);
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
  if (!(c.rc > 0.0)) fail("rc_m must be > 0");
  if (!(c.d >= 0.0) || !(c.d < std::sqrt(3.0) * c.rc)) fail("d_m must satisfy 0 <= d < sqrt(3)*rc");
  if (!(c.v > 0.0)) fail("v_mps must be > 0");
  if (!(c.mission_time >= 0.0)) fail("mission_time_s must be >= 0");
  if (!(c.r_e >= 0.0)) fail("r_e_m must be >= 0");
  if (!(c.r_e < c.rc)) fail("r_e_m must be < rc_m");
  if (!(c.user_density >= 0.0)) fail("lambda_u_per_km2 must be >= 0");
  if (!(c.r_s >= 0.0)) fail("r_s_m must be >= 0");
  if (!(c.d_safe > 2.0 * c.r_s)) fail("d_safe_m must exceed 2*r_s_m");
  if (!(c.tick_dt > 0.0)) fail("tick_dt_s must be > 0");
  if (!(c.tdoa_sigma >= 0.0)) fail("sigma_m must be >= 0");
}

// ---------------------------------------------------------------------------
// Random streams

using Rng = std::mt19937_64;

enum class Stream : std::uint32_t { users = 1, estimates = 2, random_search = 3 };

/// Independent stream per (seed, purpose), so changing how one part of a run
/// consumes randomness never shifts another part.
inline Rng make_stream(std::uint64_t seed, Stream stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), 0x5eedu};
  return Rng(seq);
}

// ---------------------------------------------------------------------------
// Users

/// Poisson count with mean density * area, positions uniform in the polygon.
template <class R>
std::vector<UserTruth> generate_users(const ConvexPolygon& polygon, double density, R& rng) {
  if (!(density >= 0.0)) throw std::invalid_argument("generate_users: density must be >= 0");
  std::vector<UserTruth> users;
  if (density == 0.0) return users;
  std::poisson_distribution<long> count_dist(density * polygon.area());
  const long n = count_dist(rng);
  const auto [lo, hi] = polygon.bounds();
  std::uniform_real_distribution<double> ux(lo.x, hi.x);
  std::uniform_real_distribution<double> uy(lo.y, hi.y);
  users.reserve(static_cast<std::size_t>(n));
  while (static_cast<long>(users.size()) < n) {
    const Vec2 p{ux(rng), uy(rng)};
    if (contains(polygon, p)) users.push_back({static_cast<int>(users.size()), p});
  }
  return users;
}

/// Users whose true position is within rc of at least one center.
inline int served_count(const std::vector<UserTruth>& users, const std::vector<Vec2>& centers,
                        double rc) {
  int n = 0;
  for (const auto& u : users) {
    n += std::any_of(centers.begin(), centers.end(),
                     [&](const Vec2& c) { return disk_contains({c, rc}, u.position); })
             ? 1
             : 0;
  }
  return n;
}

namespace detail {

/// Bucket grid over user positions.
class UserGrid {
 public:
  UserGrid(const std::vector<UserTruth>& users, double cell) : users_(users), cell_(cell) {
    for (std::size_t i = 0; i < users.size(); ++i) {
      buckets_[key(index(users[i].position.x), index(users[i].position.y))].push_back(
          static_cast<int>(i));
    }
  }

  /// Indices of users within `radius` (<= cell) of p, ascending.
  std::vector<int> near(const Vec2& p, double radius) const {
    std::vector<int> out;
    const std::int64_t cx = index(p.x);
    const std::int64_t cy = index(p.y);
    for (std::int64_t dx = -1; dx <= 1; ++dx) {
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        const auto it = buckets_.find(key(cx + dx, cy + dy));
        if (it == buckets_.end()) continue;
        for (int i : it->second) {
          if (disk_contains({p, radius}, users_[i].position)) out.push_back(i);
        }
      }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

 private:
  std::int64_t index(double v) const { return static_cast<std::int64_t>(std::floor(v / cell_)); }
  // Exact packing of two 32-bit cell indices, so distinct cells never share a bucket.
  static std::int64_t key(std::int64_t x, std::int64_t y) {
    return static_cast<std::int64_t>((static_cast<std::uint64_t>(x) << 32) ^
                                     (static_cast<std::uint64_t>(y) & 0xffffffffULL));
  }

  const std::vector<UserTruth>& users_;
  double cell_;
  std::unordered_map<std::int64_t, std::vector<int>> buckets_;
};

/// Cursor moving along a polyline at constant speed.
class PolylineCursor {
 public:
  explicit PolylineCursor(const std::vector<Vec2>& pts) : pts_(&pts) {}

  Vec2 position() const {
    const auto& p = *pts_;
    if (seg_ + 1 >= p.size()) return p.back();
    const Vec2 dir = p[seg_ + 1] - p[seg_];
    const double len = norm(dir);
    return len > 0.0 ? p[seg_] + dir * (offset_ / len) : p[seg_];
  }

  double heading() const {
    const auto& p = *pts_;
    const std::size_t s = std::min(seg_, p.size() - 2);
    const Vec2 dir = p[s + 1] - p[s];
    return std::atan2(dir.y, dir.x);
  }

  bool done() const { return seg_ + 1 >= pts_->size(); }
  double traveled() const { return traveled_; }

  /// Moves up to `dist`; returns the distance actually covered.
  double advance(double dist) {
    const auto& p = *pts_;
    double moved = 0.0;
    while (dist - moved > 0.0 && !done()) {
      const double len = distance(p[seg_], p[seg_ + 1]);
      const double left = len - offset_;
      if (dist - moved >= left) {
        moved += left;
        ++seg_;
        offset_ = 0.0;
      } else {
        offset_ += dist - moved;
        moved = dist;
      }
    }
    traveled_ += moved;
    return moved;
  }

 private:
  const std::vector<Vec2>* pts_;
  std::size_t seg_ = 0;
  double offset_ = 0.0;
  double traveled_ = 0.0;
};

}  // namespace detail

struct TraceRow {
  long tick = 0;
  int drone_id = 0;
  Vec2 position;
};

struct Stage1Result {
  std::vector<EstimateDisk> estimates;
  /// True positions of the estimated users, aligned with `estimates`.
  std::vector<Vec2> estimated_truths;
  double elapsed = 0.0;
  bool sweep_completed = false;
  /// Smallest distance seen between drones of different fleets.
  double min_inter_fleet_distance = std::numeric_limits<double>::infinity();
  int avoidance_activations = 0;
  /// tdoa mode: fixes that needed more than one formation snapshot.
  int deferred_fixes = 0;
  /// tdoa mode: users whose fix fell back to the bounded-error disk.
  int fallback_fixes = 0;
};

namespace detail {

struct PendingFix {
  int fleet = 0;
  Vec2 first_centroid;
  std::vector<TdoaEpoch> epochs;
};

}  // namespace detail

/// Stage 1: fleets fly their zigzag paths, fixing every user that enters a
/// formation's overlapped coverage. Ends when all paths are complete or the
/// mission time runs out.
inline Stage1Result run_stage1(const SimConfig& config, const std::vector<UserTruth>& users,
                               const SweepPlan& plan, Rng& rng,
                               std::vector<TraceRow>* trace = nullptr) {
  Stage1Result out;
  const std::size_t fleets = plan.fleets.size();
  std::vector<detail::PolylineCursor> cursors;
  for (const auto& f : plan.fleets) cursors.emplace_back(f.path.waypoints);
  std::vector<Vec2> offsets(fleets);
  std::vector<char> detected(users.size(), 0);
  std::map<int, detail::PendingFix> pending;
  const detail::UserGrid grid(users, config.rc);
  const double tdoa_slack = 6.0 * config.tdoa_sigma + 1.0;
  const AvoidanceParams avoid = config.avoidance_params();

  auto formation = [&](std::size_t f) {
    FleetGeometry fg = plan.fleets[f].formation;
    fg.centroid = cursors[f].position() + offsets[f];
    fg.heading = cursors[f].heading();
    return fg;
  };

  auto record = [&](int user_index, const Vec2& center) {
    detected[user_index] = 1;
    out.estimates.push_back({users[user_index].id, center, config.r_e});
    out.estimated_truths.push_back(users[user_index].position);
  };
  auto fallback = [&](int user_index) {
    ++out.fallback_fixes;
    record(user_index, make_estimate_disk(users[user_index], config.r_e, rng).center);
  };
  auto finish_pending = [&](int user_index, detail::PendingFix& p) {
    const MultiEpochFix fix = resolve_epochs(p.epochs, config.rc, tdoa_slack);
    if (fix.fix.converged && !fix.ambiguous) {
      ++out.deferred_fixes;
      record(user_index, fix.fix.position);
    } else {
      fallback(user_index);
    }
  };

  auto detect = [&]() {
    for (std::size_t f = 0; f < fleets; ++f) {
      const FleetGeometry fg = formation(f);
      const auto drones = fleet_drone_positions(fg);
      std::vector<int> inside;
      for (int i : grid.near(fg.centroid, config.rc)) {
        if (detected[i] || !in_overlap(drones, config.rc, users[i].position)) continue;
        inside.push_back(i);
      }
      for (int i : inside) {
        const Vec2 truth = users[i].position;
        if (config.estimate_mode == EstimateMode::abstract_disk) {
          record(i, make_estimate_disk(users[i], config.r_e, rng).center);
          continue;
        }
        const int serving = assign_serving_drone(truth, drones, config.rc);
        TdoaEpoch epoch{drones, generate_tdoa(truth, drones, serving, config.tdoa_sigma, rng)};
        auto it = pending.find(i);
        if (it == pending.end()) {
          const MultiEpochFix fix =
              resolve_epochs(std::span<const TdoaEpoch>(&epoch, 1), config.rc, tdoa_slack);
          if (fix.fix.converged && !fix.ambiguous) {
            record(i, fix.fix.position);
          } else {
            pending[i] = {static_cast<int>(f), fg.centroid, {epoch}};
          }
          continue;
        }
        auto& p = it->second;
        if (p.fleet != static_cast<int>(f)) continue;
        p.epochs.push_back(epoch);
        // Wait until the formation has moved about one side length so the
        // snapshots see the user from measurably different geometry.
        if (distance(fg.centroid, p.first_centroid) >= std::max(config.d, config.v * config.tick_dt)) {
          finish_pending(i, p);
          pending.erase(it);
        }
      }
      // Users that left this formation's coverage before a second look.
      for (auto it = pending.begin(); it != pending.end();) {
        if (it->second.fleet == static_cast<int>(f) &&
            !in_overlap(drones, config.rc, users[it->first].position)) {
          if (it->second.epochs.size() > 1) {
            finish_pending(it->first, it->second);
          } else {
            fallback(it->first);
          }
          it = pending.erase(it);
        } else {
          ++it;
        }
      }
    }
  };

  auto avoid_collisions = [&]() {
    std::vector<DroneState> states;
    for (std::size_t f = 0; f < fleets; ++f) {
      const FleetGeometry fg = formation(f);
      const Vec2 vel = cursors[f].done() ? Vec2{} : unit_vector(fg.heading) * config.v;
      const auto drones = fleet_drone_positions(fg);
      for (int k = 0; k < 3; ++k) {
        states.push_back({static_cast<int>(f * 3 + k), drones[k], vel, static_cast<int>(f)});
      }
    }
    for (std::size_t i = 0; i < states.size(); ++i) {
      for (std::size_t j = i + 1; j < states.size(); ++j) {
        if (states[i].group == states[j].group) continue;
        out.min_inter_fleet_distance =
            std::min(out.min_inter_fleet_distance, distance(states[i].position, states[j].position));
      }
    }
    if (!config.avoidance) return;
    const auto cmds = deconflict(states, avoid);
    for (std::size_t f = 0; f < fleets; ++f) {
      Vec2 shift;
      int active = 0;
      for (int k = 0; k < 3; ++k) {
        const auto& c = cmds[f * 3 + k];
        if (!c.active) continue;
        ++active;
        shift += c.lateral * (config.tick_dt / std::max(c.horizon, config.tick_dt));
      }
      if (active > 0) {
        ++out.avoidance_activations;
        offsets[f] += shift / active;
      } else if (const double len = norm(offsets[f]); len > 0.0) {
        // Drift back onto the planned track.
        const double back = std::min(len, 0.5 * config.v * config.tick_dt);
        offsets[f] -= offsets[f] * (back / len);
      }
    }
  };

  auto emit_trace = [&](long tick) {
    if (trace == nullptr) return;
    for (std::size_t f = 0; f < fleets; ++f) {
      const auto drones = fleet_drone_positions(formation(f));
      for (int k = 0; k < 3; ++k) trace->push_back({tick, static_cast<int>(f * 3 + k), drones[k]});
    }
  };

  auto all_done = [&]() {
    return std::all_of(cursors.begin(), cursors.end(), [](const auto& c) { return c.done(); });
  };

  double t = 0.0;
  long tick = 0;
  if (config.mission_time > 0.0 && fleets > 0) {
    emit_trace(tick);
    detect();
    while (!all_done() && t < config.mission_time) {
      const double step = std::min(config.tick_dt, config.mission_time - t);
      double finish = 0.0;
      for (auto& c : cursors) {
        const bool was_done = c.done();
        const double moved = c.advance(config.v * step);
        if (!was_done && c.done()) finish = std::max(finish, moved / config.v);
      }
      t = all_done() ? t + finish : t + step;
      ++tick;
      avoid_collisions();
      emit_trace(tick);
      detect();
    }
  }
  for (auto& [i, p] : pending) {
    if (p.epochs.size() > 1) {
      finish_pending(i, p);
    } else {
      fallback(i);
    }
  }
  out.elapsed = t;
  out.sweep_completed = fleets > 0 && all_done();
  return out;
}

struct MetricsRow {
  std::string algorithm;
  double lambda_u_per_km2 = 0.0;
  double r_e = 0.0;
  std::uint64_t seed = 0;
  int n_users = 0;
  int detected = 0;
  int served = 0;
  bool sweep_completed = false;
  double elapsed = 0.0;
  /// Not serialized; varies run to run.
  double wall_runtime = 0.0;
};

struct RunResult {
  DeploymentPlan plan;
  MetricsRow metrics;
  std::vector<EstimateDisk> estimates;
  Stage1Result stage1;
  /// Random search: best-so-far served count after each tick.
  std::vector<int> best_history;
};

inline std::vector<FleetGeometry> make_fleets(const SimConfig& config) {
  const int f = fleet_count(config.m);
  return std::vector<FleetGeometry>(static_cast<std::size_t>(f),
                                    FleetGeometry{{}, 0.0, config.d, config.rc});
}

namespace detail {

inline MetricsRow base_row(const SimConfig& config, std::size_t n_users) {
  MetricsRow row;
  row.algorithm = to_string(config.algorithm);
  row.lambda_u_per_km2 = config.user_density * 1e6;
  row.r_e = config.r_e;
  row.seed = config.seed;
  row.n_users = static_cast<int>(n_users);
  return row;
}

inline std::vector<Vec2> centers_of(const DeploymentPlan& plan) {
  std::vector<Vec2> out;
  for (const auto& p : plan.placements) out.push_back(p.center);
  return out;
}

}  // namespace detail

/// Two-stage algorithm over a given user realization.
inline RunResult run_proposed(const SimConfig& config, const std::vector<UserTruth>& users,
                              std::vector<TraceRow>* trace = nullptr) {
  const auto started = std::chrono::steady_clock::now();
  SimConfig c = config;
  c.algorithm = Algorithm::proposed;
  validate(c);
  const SweepPlan sweep = plan_sweep(c.polygon, c.proportions, make_fleets(c), c.v);
  Rng rng = make_stream(c.seed, Stream::estimates);
  RunResult out;
  out.stage1 = run_stage1(c, users, sweep, rng, trace);
  out.estimates = out.stage1.estimates;
  out.plan = greedy_deploy(out.estimates, c.m, c.rc, c.polygon.centroid());
  out.metrics = detail::base_row(c, users.size());
  out.metrics.detected = static_cast<int>(out.estimates.size());
  out.metrics.served = served_count(users, detail::centers_of(out.plan), c.rc);
  out.metrics.sweep_completed = out.stage1.sweep_completed;
  out.metrics.elapsed = out.stage1.elapsed;
  out.metrics.wall_runtime =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return out;
}

inline std::vector<UserTruth> generate_users(const SimConfig& config) {
  Rng rng = make_stream(config.seed, Stream::users);
  return generate_users(config.polygon, config.user_density, rng);
}

inline RunResult run_proposed(const SimConfig& config) {
  return run_proposed(config, generate_users(config));
}

/// Random-search baseline. Drones fly straight at speed v, reflect off the
/// operating-area boundary when their coverage disk touches it, and turn to
/// a random heading away from any drone whose coverage disk they touch.
/// The best joint snapshot of positions (most users within Rc) is the
/// deployment.
inline RunResult run_random_search(const SimConfig& config, const std::vector<UserTruth>& users,
                                   std::vector<TraceRow>* trace = nullptr) {
  const auto started = std::chrono::steady_clock::now();
  SimConfig c = config;
  c.algorithm = Algorithm::random_search;
  validate(c);
  Rng rng = make_stream(c.seed, Stream::random_search);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto [lo, hi] = c.polygon.bounds();
  const auto n = static_cast<std::size_t>(c.m);

  std::vector<Vec2> pos;
  std::vector<Vec2> dir;
  while (pos.size() < n) {
    Vec2 p;
    // Start positions at least d_safe apart.
    for (int attempt = 0; attempt < 1000; ++attempt) {
      do {
        p = {lo.x + (hi.x - lo.x) * unit(rng), lo.y + (hi.y - lo.y) * unit(rng)};
      } while (!contains(c.polygon, p));
      if (std::all_of(pos.begin(), pos.end(), [&](const Vec2& q) { return distance(p, q) >= c.d_safe; })) {
        break;
      }
    }
    pos.push_back(p);
    dir.push_back(unit_vector(2.0 * std::numbers::pi * unit(rng)));
  }

  const auto& ring = c.polygon.vertices();
  std::vector<char> ever(users.size(), 0);
  auto count_now = [&]() {
    int served = 0;
    for (std::size_t u = 0; u < users.size(); ++u) {
      bool in = false;
      for (const Vec2& p : pos) {
        if (disk_contains({p, c.rc}, users[u].position)) {
          in = true;
          break;
        }
      }
      if (in) {
        ++served;
        ever[u] = 1;
      }
    }
    return served;
  };

  RunResult out;
  std::vector<Vec2> best_pos = pos;
  int best = count_now();
  out.best_history.push_back(best);
  long tick = 0;
  if (trace) {
    for (std::size_t i = 0; i < n; ++i) trace->push_back({tick, static_cast<int>(i), pos[i]});
  }
  const AvoidanceParams avoid = c.avoidance_params();
  double t = 0.0;
  while (t < c.mission_time) {
    const double step = std::min(c.tick_dt, c.mission_time - t);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        const Vec2 to_other = pos[j] - pos[i];
        if (norm(to_other) <= 2.0 * c.rc + kGeomTol && dot(dir[i], to_other) > 0.0) {
          const Vec2 away = -to_other;
          const double base = std::atan2(away.y, away.x);
          dir[i] = unit_vector(base + std::numbers::pi * (unit(rng) - 0.5));
        }
      }
      // Specular reflection off every edge the coverage disk touches while
      // heading outward; a few passes settle corners.
      for (int pass = 0; pass < 4; ++pass) {
        bool reflected = false;
        for (std::size_t e = 0; e < ring.size(); ++e) {
          const Vec2 a = ring[e];
          const Vec2 b = ring[(e + 1) % ring.size()];
          const Vec2 edge = (b - a) / distance(a, b);
          const Vec2 outward{edge.y, -edge.x};
          const double inside_dist = dot(pos[i] - a, -outward);
          if (inside_dist <= c.rc + kGeomTol && dot(dir[i], outward) > 0.0) {
            dir[i] -= outward * (2.0 * dot(dir[i], outward));
            reflected = true;
          }
        }
        if (!reflected) break;
      }
    }

    std::vector<Vec2> vel(n);
    for (std::size_t i = 0; i < n; ++i) vel[i] = dir[i] * c.v;
    if (c.avoidance) {
      std::vector<DroneState> states;
      for (std::size_t i = 0; i < n; ++i) states.push_back({static_cast<int>(i), pos[i], vel[i], -1});
      const auto cmds = deconflict(states, avoid);
      for (std::size_t i = 0; i < n; ++i) {
        if (cmds[i].active) vel[i] = cmds[i].displacement / std::max(cmds[i].horizon, step);
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2 next = pos[i] + vel[i] * step;
      if (contains(c.polygon, next)) {
        pos[i] = next;
      } else {
        dir[i] = -dir[i];
      }
    }
    t += step;
    ++tick;
    if (trace) {
      for (std::size_t i = 0; i < n; ++i) trace->push_back({tick, static_cast<int>(i), pos[i]});
    }
    const int now = count_now();
    if (now > best) {
      best = now;
      best_pos = pos;
    }
    out.best_history.push_back(best);
  }

  std::vector<char> taken(users.size(), 0);
  for (const Vec2& p : best_pos) {
    PlacementResult placed{p, {}};
    for (std::size_t u = 0; u < users.size(); ++u) {
      if (!taken[u] && disk_contains({p, c.rc}, users[u].position)) {
        taken[u] = 1;
        placed.covered_ids.push_back(users[u].id);
      }
    }
    out.plan.total_covered += static_cast<int>(placed.covered_ids.size());
    out.plan.placements.push_back(std::move(placed));
  }
  out.metrics = detail::base_row(c, users.size());
  out.metrics.detected = static_cast<int>(std::count(ever.begin(), ever.end(), 1));
  out.metrics.served = best;
  out.metrics.sweep_completed = false;
  out.metrics.elapsed = t;
  out.metrics.wall_runtime =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return out;
}

inline RunResult run_random_search(const SimConfig& config) {
  return run_random_search(config, generate_users(config));
}

inline RunResult run(const SimConfig& config, std::vector<TraceRow>* trace = nullptr) {
  const auto users = generate_users(config);
  return config.algorithm == Algorithm::proposed ? run_proposed(config, users, trace)
                                                 : run_random_search(config, users, trace);
}

/// Full factorial {density} x {algorithm} x {replication}. Both algorithms
/// see the same users for a given (density, seed); replication r uses seed
/// base.seed + r. Rows come back ordered by density, algorithm, seed
/// regardless of how many worker threads ran.
inline std::vector<MetricsRow> run_comparison(const SimConfig& base,
                                              const std::vector<double>& densities_per_km2,
                                              int replications, unsigned threads = 0) {
  if (replications < 1) throw std::invalid_argument("run_comparison: replications must be >= 1");
  const std::size_t cells = densities_per_km2.size() * static_cast<std::size_t>(replications);
  std::vector<MetricsRow> proposed(cells), random(cells);

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t cell = next++; cell < cells; cell = next++) {
      SimConfig c = base;
      c.user_density = densities_per_km2[cell / replications] * 1e-6;
      c.seed = base.seed + cell % replications;
      const auto users = generate_users(c);
      proposed[cell] = run_proposed(c, users).metrics;
      random[cell] = run_random_search(c, users).metrics;
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(cells, 1)));
  std::vector<std::thread> pool;
  for (unsigned i = 1; i < threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  std::vector<MetricsRow> rows;
  rows.reserve(2 * cells);
  for (std::size_t di = 0; di < densities_per_km2.size(); ++di) {
    for (const auto* block : {&proposed, &random}) {
      for (int r = 0; r < replications; ++r) rows.push_back((*block)[di * replications + r]);
    }
  }
  return rows;
}

struct CurvePoint {
  std::string algorithm;
  double lambda_u_per_km2 = 0.0;
  double r_e = 0.0;
  int replications = 0;
  double mean_served = 0.0;
  double stderr_served = 0.0;
};

/// Mean and standard error of served counts per (algorithm, density), in
/// first-appearance order.
inline std::vector<CurvePoint> aggregate_curves(const std::vector<MetricsRow>& rows) {
  std::vector<CurvePoint> out;
  std::vector<std::vector<double>> samples;
  for (const auto& row : rows) {
    auto it = std::find_if(out.begin(), out.end(), [&](const CurvePoint& p) {
      return p.algorithm == row.algorithm && p.lambda_u_per_km2 == row.lambda_u_per_km2 &&
             p.r_e == row.r_e;
    });
    if (it == out.end()) {
      out.push_back({row.algorithm, row.lambda_u_per_km2, row.r_e, 0, 0.0, 0.0});
      samples.emplace_back();
      it = out.end() - 1;
    }
    samples[static_cast<std::size_t>(it - out.begin())].push_back(row.served);
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto& s = samples[i];
    const double n = static_cast<double>(s.size());
    double mean = 0.0;
    for (double x : s) mean += x;
    mean /= n;
    double ss = 0.0;
    for (double x : s) ss += (x - mean) * (x - mean);
    out[i].replications = static_cast<int>(s.size());
    out[i].mean_served = mean;
    out[i].stderr_served = s.size() > 1 ? std::sqrt(ss / (n - 1.0)) / std::sqrt(n) : 0.0;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Transit scenarios for collision avoidance

struct TransitDrone {
  int id = 0;
  int group = -1;
  Vec2 start;
  Vec2 goal;
};

struct TransitResult {
  /// Smallest distance between drones of different groups.
  double min_distance = std::numeric_limits<double>::infinity();
  int activations = 0;
  double duration = 0.0;
  bool all_arrived = false;
  std::vector<TraceRow> trace;
};

/// Kinematic replay of drones flying straight to their goals at `speed`.
/// With avoidance on, the threat picture is re-evaluated every tick; a
/// commanded displacement is flown as a constant velocity until its
/// closest-approach horizon expires or a newer command replaces it.
inline TransitResult run_transit(const std::vector<TransitDrone>& drones, double speed, double dt,
                                 const AvoidanceParams& params, bool avoidance, double max_time,
                                 bool keep_trace = false) {
  const std::size_t n = drones.size();
  std::vector<Vec2> pos(n);
  std::vector<Vec2> maneuver(n);
  std::vector<double> maneuver_until(n, -1.0);
  for (std::size_t i = 0; i < n; ++i) pos[i] = drones[i].start;
  TransitResult out;

  auto nominal = [&](std::size_t i) {
    const Vec2 to_goal = drones[i].goal - pos[i];
    const double len = norm(to_goal);
    if (len <= 1e-9) return Vec2{};
    return to_goal * (std::min(speed, len / dt) / len);
  };
  auto measure = [&]() {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (drones[i].group >= 0 && drones[i].group == drones[j].group) continue;
        out.min_distance = std::min(out.min_distance, distance(pos[i], pos[j]));
      }
    }
  };

  measure();
  double t = 0.0;
  long tick = 0;
  while (t < max_time) {
    std::vector<Vec2> vel(n);
    for (std::size_t i = 0; i < n; ++i) vel[i] = t < maneuver_until[i] ? maneuver[i] : nominal(i);
    if (avoidance) {
      std::vector<DroneState> states;
      for (std::size_t i = 0; i < n; ++i) {
        states.push_back({drones[i].id, pos[i], vel[i], drones[i].group});
      }
      const auto cmds = deconflict(states, params);
      for (std::size_t i = 0; i < n; ++i) {
        if (!cmds[i].active) continue;
        ++out.activations;
        const double horizon = std::max(cmds[i].horizon, dt);
        maneuver[i] = cmds[i].displacement / horizon;
        maneuver_until[i] = t + horizon;
        vel[i] = maneuver[i];
      }
    }
    for (std::size_t i = 0; i < n; ++i) pos[i] += vel[i] * dt;
    t += dt;
    ++tick;
    if (keep_trace) {
      for (std::size_t i = 0; i < n; ++i) out.trace.push_back({tick, drones[i].id, pos[i]});
    }
    measure();
    bool arrived = true;
    for (std::size_t i = 0; i < n; ++i) {
      arrived = arrived && t >= maneuver_until[i] && distance(pos[i], drones[i].goal) <= 1e-6;
    }
    if (arrived) {
      out.all_arrived = true;
      break;
    }
  }
  out.duration = t;
  return out;
}

/// Two formations of three drones (side d) whose straight transit legs
/// cross at the origin at the same moment.
inline std::vector<TransitDrone> crossing_fleets_scenario(double d, double leg) {
  std::vector<TransitDrone> out;
  const double circumradius = d / std::sqrt(3.0);
  for (int f = 0; f < 2; ++f) {
    const Vec2 axis = f == 0 ? Vec2{1.0, 0.0} : Vec2{0.0, 1.0};
    for (int k = 0; k < 3; ++k) {
      const double angle = std::atan2(axis.y, axis.x) + 2.0 * std::numbers::pi * k / 3.0;
      const Vec2 slot = unit_vector(angle) * circumradius;
      out.push_back({f * 3 + k, f, slot - axis * leg, slot + axis * leg});
    }
  }
  return out;
}

/// `count` drones evenly spaced on a circle, each flying to the antipode.
inline std::vector<TransitDrone> converging_ring_scenario(int count, double radius) {
  std::vector<TransitDrone> out;
  for (int i = 0; i < count; ++i) {
    const Vec2 p = unit_vector(2.0 * std::numbers::pi * i / count) * radius;
    out.push_back({i, -1, p, -p});
  }
  return out;
}

}  // namespace dronebs
