#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "dronebs/collision_avoidance.hpp"
#include "dronebs/simulation.hpp"

using namespace dronebs;

namespace {

constexpr double kPi = std::numbers::pi;

// Threatening encounter with closest approach tau0 seconds ahead, pass
// distance below d_safe, and at least `lead` meters of relative travel
// before closest approach.
std::pair<DroneState, DroneState> threatening_pair(std::mt19937_64& rng, double d_safe, double lead) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  while (true) {
    const Vec2 va = unit_vector(2 * kPi * u(rng)) * (1.0 + 9.0 * u(rng));
    const Vec2 vb = unit_vector(2 * kPi * u(rng)) * (1.0 + 9.0 * u(rng));
    const Vec2 c = vb - va;
    if (norm(c) < 1.0) continue;
    const double tau0 = 5.0 + 25.0 * u(rng);
    if (norm(c) * tau0 < lead) continue;
    const Vec2 pass = perp(c / norm(c)) * (d_safe * (2 * u(rng) - 1));
    const Vec2 pa{1000 * u(rng), 1000 * u(rng)};
    return {DroneState{0, pa, va, -1}, DroneState{1, pa + pass - c * tau0, vb, -1}};
  }
}

// Minimum separation when both drones fly straight to their commanded
// waypoints over tau, then resume their original velocities for another tau.
double replay_min_distance(const DroneState& a, const DroneState& b, const AvoidanceCommand& cmd,
                           double tau) {
  double best = 1e18;
  const int steps = 10000;
  for (int i = 0; i <= steps; ++i) {
    const double t = 2.0 * tau * i / steps;
    const Vec2 pa = t <= tau ? a.position + cmd.displacement_a * (t / tau)
                             : a.position + cmd.displacement_a + a.velocity * (t - tau);
    const Vec2 pb = t <= tau ? b.position + cmd.displacement_b * (t / tau)
                             : b.position + cmd.displacement_b + b.velocity * (t - tau);
    best = std::min(best, distance(pa, pb));
  }
  return best;
}

}  // namespace

TEST(Encounter, WorkedHeadOnExample) {
  const DroneState a{0, {0, 0}, {10, 0}, -1};
  const DroneState b{1, {100, 10}, {-10, 0}, -1};
  const auto g = encounter(a, b, 20.0);
  EXPECT_DOUBLE_EQ(g.time_to_cpa, 5.0);
  EXPECT_NEAR(g.pass_vector.x, 0.0, 1e-12);
  EXPECT_NEAR(g.pass_vector.y, 10.0, 1e-12);
  EXPECT_DOUBLE_EQ(g.pass_distance, 10.0);
  EXPECT_DOUBLE_EQ(g.margin, -10.0);
  EXPECT_TRUE(g.threatening());
}

TEST(Encounter, CollinearPursuit) {
  const DroneState a{0, {0, 0}, {5, 0}, -1};
  const DroneState b{1, {-100, 0}, {8, 0}, -1};
  const auto g = encounter(a, b, 20.0);
  EXPECT_NEAR(g.pass_distance, 0.0, 1e-12);
  EXPECT_NEAR(g.margin, -20.0, 1e-12);
}

TEST(Encounter, StaticAndSeparating) {
  const auto s = encounter({0, {0, 0}, {3, 4}, -1}, {1, {5, 0}, {3, 4}, -1}, 20.0);
  EXPECT_TRUE(s.static_relative);
  EXPECT_DOUBLE_EQ(s.pass_distance, 5.0);
  EXPECT_FALSE(s.threatening());
  const auto sep = encounter({0, {0, 0}, {-5, 0}, -1}, {1, {10, 0}, {5, 0}, -1}, 20.0);
  EXPECT_TRUE(sep.separating);
  EXPECT_FALSE(sep.threatening());
}

TEST(Encounter, OrthogonalAndMinimalOverTimeGrid) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const DroneState a{0, {500 * u(rng), 500 * u(rng)}, {10 * u(rng), 10 * u(rng)}, -1};
    const DroneState b{1, {500 * u(rng), 500 * u(rng)}, {10 * u(rng), 10 * u(rng)}, -1};
    const auto g = encounter(a, b, 20.0);
    const double scale = norm(g.relative_distance) * norm(g.relative_velocity);
    EXPECT_LE(std::abs(dot(g.pass_vector, g.relative_velocity)), 1e-9 * std::max(1.0, scale));
    const Vec2 at_cpa = (b.position + b.velocity * g.time_to_cpa) - (a.position + a.velocity * g.time_to_cpa);
    EXPECT_NEAR(norm(at_cpa), g.pass_distance, 1e-9 * std::max(1.0, norm(g.relative_distance)));
    const double horizon = 2.0 * std::max(std::abs(g.time_to_cpa), 1.0);
    for (int k = 0; k <= 10000; ++k) {
      const double t = g.time_to_cpa - horizon / 2 + horizon * k / 10000;
      const Vec2 sep = (b.position + b.velocity * t) - (a.position + a.velocity * t);
      EXPECT_GE(norm(sep), g.pass_distance - 1e-9);
    }
  }
}

TEST(AvoidanceCommand, SymmetricHeadOnSplitsEvenly) {
  const DroneState a{0, {0, 0}, {10, 0}, -1};
  const DroneState b{1, {100, 10}, {-10, 0}, -1};
  const auto g = encounter(a, b, 20.0);
  const auto cmd = avoidance_command(a, b, g, 10.0, 1e9);
  // Total lateral opening l* - margin = 20 m, half each.
  EXPECT_NEAR(norm(cmd.lateral_a), 10.0, 1e-12);
  EXPECT_NEAR(norm(cmd.lateral_b), 10.0, 1e-12);
  // A is pushed away from B along the pass vector, B the other way.
  EXPECT_LT(dot(cmd.lateral_a, g.pass_vector), 0.0);
  EXPECT_GT(dot(cmd.lateral_b, g.pass_vector), 0.0);
  EXPECT_NEAR(cmd.displacement_a.x, 50.0, 1e-12);
  EXPECT_FALSE(cmd.clamped_a);
}

TEST(AvoidanceCommand, HoveringDroneTakesEverything) {
  const DroneState a{0, {0, 0}, {0, 0}, -1};
  const DroneState b{1, {100, 5}, {-10, 0}, -1};
  const auto g = encounter(a, b, 20.0);
  const auto cmd = avoidance_command(a, b, g, 10.0, 1e9);
  EXPECT_NEAR(norm(cmd.lateral_a), 10.0 - g.margin, 1e-12);
  EXPECT_NEAR(norm(cmd.lateral_b), 0.0, 1e-12);
}

TEST(AvoidanceCommand, PerfectHeadOnUsesPerpendicular) {
  const DroneState a{0, {0, 0}, {10, 0}, -1};
  const DroneState b{1, {100, 0}, {-10, 0}, -1};
  const auto g = encounter(a, b, 20.0);
  const auto cmd = avoidance_command(a, b, g, 10.0, 1e9);
  // c = (-20, 0); its counter-clockwise perpendicular is (0, -1).
  EXPECT_NEAR(cmd.lateral_b.y, -15.0, 1e-12);
  EXPECT_NEAR(cmd.lateral_a.y, 15.0, 1e-12);
}

TEST(AvoidanceCommand, ClampsToControlLimit) {
  const DroneState a{0, {0, 0}, {10, 0}, -1};
  const DroneState b{1, {100, 10}, {-10, 0}, -1};
  const auto cmd = avoidance_command(a, b, encounter(a, b, 20.0), 10.0, 30.0);
  EXPECT_TRUE(cmd.clamped_a);
  EXPECT_NEAR(norm(cmd.displacement_a), 30.0, 1e-12);
}

TEST(AvoidanceCommand, RejectsInvalidCalls) {
  const DroneState a{0, {0, 0}, {10, 0}, -1};
  const DroneState far{1, {100, 500}, {-10, 0}, -1};
  EXPECT_THROW(avoidance_command(a, far, encounter(a, far, 20.0), 10.0, 100.0), std::invalid_argument);
  const DroneState b{1, {100, 10}, {-10, 0}, -1};
  EXPECT_THROW(avoidance_command(a, b, encounter(a, b, 20.0), 0.0, 100.0), std::invalid_argument);
}

TEST(AvoidanceCommand, SwappingRolesGivesSamePhysicalCommand) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 200; ++i) {
    const auto [a, b] = threatening_pair(rng, 20.0, 40.0);
    const auto ab = avoidance_command(a, b, encounter(a, b, 20.0), 10.0, 1e9);
    const auto ba = avoidance_command(b, a, encounter(b, a, 20.0), 10.0, 1e9);
    if (encounter(a, b, 20.0).pass_distance < 1e-6) continue;
    EXPECT_NEAR(distance(ab.displacement_a, ba.displacement_b), 0.0, 1e-9);
    EXPECT_NEAR(distance(ab.displacement_b, ba.displacement_a), 0.0, 1e-9);
  }
}

TEST(AvoidanceCommand, ParallelOffsetRestoresTargetMargin) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 1000; ++i) {
    const auto [a, b] = threatening_pair(rng, 20.0, 0.0);
    const auto g = encounter(a, b, 20.0);
    const auto cmd = avoidance_command(a, b, g, 10.0, 1e9);
    const DroneState a2{0, a.position + cmd.lateral_a, a.velocity, -1};
    const DroneState b2{1, b.position + cmd.lateral_b, b.velocity, -1};
    EXPECT_GE(encounter(a2, b2, 20.0).pass_distance, 20.0 + 10.0 - 1e-6);
  }
}

TEST(AvoidanceCommand, WaypointReplayKeepsSafeDistance) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 1000; ++i) {
    const auto [a, b] = threatening_pair(rng, 20.0, 40.0);
    const auto g = encounter(a, b, 20.0);
    const auto cmd = avoidance_command(a, b, g, 10.0, 1e9);
    ASSERT_FALSE(cmd.clamped_a || cmd.clamped_b);
    EXPECT_GE(replay_min_distance(a, b, cmd, g.time_to_cpa), 20.0 - 1e-9) << i;
  }
}

TEST(Deconflict, NoThreatsNoCommands) {
  std::vector<DroneState> drones;
  for (int i = 0; i < 6; ++i) drones.push_back({i, {i * 100.0, 0}, {0, 5}, -1});
  for (const auto& c : deconflict(drones, {})) {
    EXPECT_FALSE(c.active);
    EXPECT_EQ(c.displacement, (Vec2{}));
  }
}

TEST(Deconflict, OneThreatTwoCommands) {
  std::vector<DroneState> drones;
  for (int i = 0; i < 4; ++i) drones.push_back({i, {i * 1000.0, 5000}, {0, 5}, -1});
  drones.push_back({4, {0, 0}, {10, 0}, -1});
  drones.push_back({5, {100, 10}, {-10, 0}, -1});
  const auto cmds = deconflict(drones, {});
  int active = 0;
  for (const auto& c : cmds) active += c.active ? 1 : 0;
  EXPECT_EQ(active, 2);
  EXPECT_TRUE(cmds[4].active && cmds[5].active);
}

TEST(Deconflict, SameGroupIsExempt) {
  const std::vector<DroneState> drones{{0, {0, 0}, {10, 0}, 1}, {1, {100, 10}, {-10, 0}, 1}};
  EXPECT_FALSE(deconflict(drones, {})[0].active);
}

TEST(Transit, ScriptedCrossing) {
  const AvoidanceParams params{20.0, 0.0, 0.0, 10.0};
  const auto scenario = crossing_fleets_scenario(50.0, 1000.0);
  const auto off = run_transit(scenario, 10.0, 0.1, params, false, 400.0);
  const auto on = run_transit(scenario, 10.0, 0.1, params, true, 400.0);
  EXPECT_LT(off.min_distance, 20.0);
  EXPECT_EQ(off.activations, 0);
  EXPECT_GE(on.min_distance, 20.0);
  EXPECT_GT(on.activations, 0);
  EXPECT_TRUE(on.all_arrived);
}

TEST(Transit, ConvergingRing) {
  const AvoidanceParams params{20.0, 0.0, 0.0, 10.0};
  const auto scenario = converging_ring_scenario(6, 500.0);
  const auto off = run_transit(scenario, 10.0, 0.1, params, false, 400.0);
  const auto on = run_transit(scenario, 10.0, 0.1, params, true, 400.0);
  EXPECT_LT(off.min_distance, 20.0);
  EXPECT_GE(on.min_distance, 20.0);
}
