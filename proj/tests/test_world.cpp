#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <random>

#include "drivebench/error.hpp"
#include "drivebench/expert.hpp"
#include "drivebench/routes.hpp"
#include "drivebench/vehicle.hpp"
#include "drivebench/world.hpp"

using namespace drivebench;

namespace {

std::shared_ptr<const Polyline> straight(double length) {
  return std::make_shared<const Polyline>(std::vector<Vec2>{{0, 0}, {length, 0}});
}

// Kasa algebraic circle fit: minimise sum (x^2 + y^2 + D x + E y + F)^2.
double fit_circle_radius(const std::vector<Vec2>& pts) {
  std::array<std::array<double, 4>, 3> m{};
  for (const auto& p : pts) {
    const double row[3] = {p.x, p.y, 1.0};
    const double rhs = -(p.x * p.x + p.y * p.y);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) m[i][j] += row[i] * row[j];
      m[i][3] += row[i] * rhs;
    }
  }
  for (int c = 0; c < 3; ++c) {
    int piv = c;
    for (int r = c + 1; r < 3; ++r)
      if (std::abs(m[r][c]) > std::abs(m[piv][c])) piv = r;
    std::swap(m[c], m[piv]);
    for (int r = 0; r < 3; ++r) {
      if (r == c) continue;
      const double f = m[r][c] / m[c][c];
      for (int k = c; k < 4; ++k) m[r][k] -= f * m[c][k];
    }
  }
  const double D = m[0][3] / m[0][0], E = m[1][3] / m[1][1], F = m[2][3] / m[2][2];
  return std::sqrt(D * D / 4 + E * E / 4 - F);
}

int count_kind(const std::vector<InfractionEvent>& ev, InfractionKind k) {
  return static_cast<int>(std::count_if(ev.begin(), ev.end(), [&](const InfractionEvent& e) { return e.kind == k; }));
}

// Drives straight through a stop-sign zone, crawling at `v_min` while the
// front bumper is in [stop_s - 7, stop_s - 6]. Returns the events and the
// lowest speed seen with the bumper inside the zone.
std::pair<std::vector<InfractionEvent>, double> drive_through_stop(double v_min) {
  WorldState w = make_world(straight(200.0));
  w.map.stop_signs.push_back({60.0, 8.0});
  std::vector<InfractionEvent> all;
  double lowest = 1e9;
  while (w.ego_front_s() < 70.0) {
    const double front = w.ego_front_s();
    const double desired = (front >= 53.0 && front <= 54.0) ? v_min : 3.0;
    const double accel = std::clamp((desired - w.ego.speed) / w.sim_dt, -8.0, 2.0);
    auto ev = advance_world(w, accel, 0.0);
    all.insert(all.end(), ev.begin(), ev.end());
    const double f = w.ego_front_s();
    if (f >= 52.0 && f <= 60.0) lowest = std::min(lowest, w.ego.speed);
  }
  return {all, lowest};
}

}  // namespace

TEST(StepVehicle, StraightLineIntegration) {
  VehicleState s;
  s.speed = 10.0;
  const VehicleState n = step_vehicle(s, 0.0, 0.0, 0.1);
  EXPECT_DOUBLE_EQ(n.pose.x, 1.0);
  EXPECT_DOUBLE_EQ(n.pose.y, 0.0);
  EXPECT_DOUBLE_EQ(n.pose.yaw, 0.0);
}

TEST(StepVehicle, EulerSpeedUpdateAndNoReverse) {
  VehicleState s;
  EXPECT_NEAR(step_vehicle(s, 2.0, 0.0, 0.05).speed, 0.1, 1e-15);
  s.speed = 0.2;
  EXPECT_EQ(step_vehicle(s, -8.0, 0.0, 0.05).speed, 0.0);
}

TEST(StepVehicle, ConstantSteerTracesCircle) {
  VehicleState s;
  s.speed = 5.0;
  const double expected_r = s.wheelbase / std::tan(0.1);
  const double dt = 0.01;
  const int ticks = static_cast<int>(std::ceil(2 * kPi * expected_r / s.speed / dt));
  std::vector<Vec2> trace{s.pose.position()};
  for (int i = 0; i < ticks; ++i) {
    s = step_vehicle(s, 0.0, 0.1, dt);
    trace.push_back(s.pose.position());
  }
  EXPECT_NEAR(fit_circle_radius(trace) / expected_r, 1.0, 0.01);
}

TEST(StepVehicle, RejectsInvalidInput) {
  VehicleState s;
  EXPECT_THROW(step_vehicle(s, std::nan(""), 0.0, 0.05), InvalidInput);
  EXPECT_THROW(step_vehicle(s, 0.0, std::numeric_limits<double>::infinity(), 0.05), InvalidInput);
  EXPECT_THROW(step_vehicle(s, 0.0, 0.0, 0.0), InvalidInput);
  EXPECT_THROW(step_vehicle(s, 0.0, 1.3, 0.05), InvalidInput);
}

TEST(StepVehicle, EnergyFreeKinematics) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> dt(0.001, 0.3);
  VehicleState s;
  s.speed = 7.25;
  s.pose = Pose2D(3, -2, 0.7);
  for (int i = 0; i < 500; ++i) {
    s = step_vehicle(s, 0.0, 0.0, dt(rng));
    EXPECT_EQ(s.speed, 7.25);
    EXPECT_EQ(s.pose.yaw, normalize_angle(0.7));
  }
}

TEST(BuildScenario, RedLightPlacement) {
  const ScenarioSpec spec{ScenarioKind::RedLight, 100.0, 20.0, 4};
  const WorldState w = build_scenario(spec, straight(300.0), 1);
  ASSERT_EQ(w.map.lights.size(), 1u);
  EXPECT_DOUBLE_EQ(w.map.lights[0].stop_s, 100.0);
  EXPECT_EQ(w.map.intersections.size(), 1u);
  // Nominal arrival: accelerate at 2 m/s^2 to the speed limit, then cruise,
  // until the front bumper reaches the stop line.
  const double v = 8.3, a = 2.0;
  const double t_acc = v / a, d_acc = 0.5 * a * t_acc * t_acc;
  const double travel = 100.0 - w.ego.front_offset();
  const double arrival = t_acc + (travel - d_acc) / v;
  EXPECT_EQ(w.map.lights[0].phase_at(static_cast<int>(arrival / w.sim_dt)), LightPhase::Red);
}

TEST(BuildScenario, DeterministicForSameSeed) {
  for (ScenarioKind k : kAllScenarioKinds) {
    const ScenarioSpec spec{k, 60.0, 30.0, 77};
    const auto route = straight(300.0);
    EXPECT_EQ(build_scenario(spec, route, 5), build_scenario(spec, route, 5)) << to_string(k);
  }
}

TEST(BuildScenario, DistancePerturbationIsUniformTenPercent) {
  const auto route = straight(300.0);
  const double nominal = 40.0;
  double lo = 1e9, hi = -1e9, sum = 0.0;
  const int n = 1000;
  for (int seed = 0; seed < n; ++seed) {
    const WorldState w = build_scenario({ScenarioKind::StaticObstacleSwerve, 50.0, nominal, 0}, route, seed);
    const double d = w.scenarios[0].distance;
    lo = std::min(lo, d);
    hi = std::max(hi, d);
    sum += d;
    // The obstacle actually sits at the perturbed distance past the trigger.
    EXPECT_NEAR(w.actors[0].pose.x, 50.0 + d, 1e-9);
  }
  EXPECT_GE(lo, 0.9 * nominal);
  EXPECT_LE(hi, 1.1 * nominal);
  EXPECT_NEAR(sum / n / nominal, 1.0, 0.01);
  // A uniform draw on [0.9, 1.1] should come close to both ends in 1000 tries.
  EXPECT_LT(lo, 0.91 * nominal);
  EXPECT_GT(hi, 1.09 * nominal);
}

TEST(BuildScenario, TriggerBeyondRouteEnd) {
  EXPECT_THROW(build_scenario({ScenarioKind::RedLight, 350.0, 20.0, 0}, straight(300.0), 0), InvalidSpec);
  EXPECT_THROW(build_scenario({ScenarioKind::LeadVehicle, 10.0, 400.0, 0}, straight(300.0), 0), InvalidSpec);
}

TEST(StepWorld, EmptyWorldOnlyAdvancesTick) {
  const WorldState w = make_world(straight(50.0));
  const StepResult r = step_world(w, 0.0, 0.0);
  EXPECT_TRUE(r.events.empty());
  EXPECT_EQ(r.world.tick, w.tick + 1);
  EXPECT_EQ(r.world.ego, w.ego);
  EXPECT_EQ(r.world.actors, w.actors);
  EXPECT_EQ(r.world.map, w.map);
  EXPECT_EQ(r.world.odometer, 0.0);
  EXPECT_EQ(r.world.ego_route_s, w.ego_route_s);
}

TEST(StepWorld, StaticCollisionCountedOncePerContact) {
  WorldState w = make_world(straight(100.0));
  Actor a;
  a.id = 1;
  a.kind = ActorKind::Static;
  a.pose = Pose2D(30.0, 0.0, 0.0);
  a.half_extents = {1.0, 1.0};
  a.triggered = true;
  w.actors.push_back(a);
  w.ego.speed = 3.0;
  std::vector<InfractionEvent> all;
  int overlap_ticks = 0;
  while (w.ego_route_s < 60.0) {
    auto ev = advance_world(w, 0.0, 0.0);
    all.insert(all.end(), ev.begin(), ev.end());
    overlap_ticks += overlaps(w.ego.footprint(), w.actors[0].footprint());
  }
  EXPECT_GT(overlap_ticks, 10);
  ASSERT_EQ(all.size(), 1u);
  EXPECT_EQ(all[0].kind, InfractionKind::CollisionStatic);
  EXPECT_EQ(all[0].actor_id, 1);
}

TEST(DetectInfractions, WalkerOverlapIsPedestrianCollision) {
  WorldState w = make_world(straight(100.0));
  Actor walker;
  walker.id = 4;
  walker.kind = ActorKind::Walker;
  walker.pose = Pose2D(w.ego.footprint().center, 0.0);
  walker.half_extents = {0.3, 0.3};
  w.actors.push_back(walker);
  const auto ev = detect_infractions(w);
  ASSERT_EQ(ev.size(), 1u);
  EXPECT_EQ(ev[0].kind, InfractionKind::CollisionPedestrian);
  EXPECT_TRUE(detect_infractions(w).empty());
}

TEST(DetectInfractions, StopSignSatisfiedBelowThreshold) {
  auto [events, lowest] = drive_through_stop(0.05);
  EXPECT_NEAR(lowest, 0.05, 1e-9);
  EXPECT_EQ(count_kind(events, InfractionKind::StopSign), 0);
}

TEST(DetectInfractions, StopSignViolatedAboveThreshold) {
  auto [events, lowest] = drive_through_stop(0.15);
  EXPECT_GE(lowest, 0.1);
  EXPECT_EQ(count_kind(events, InfractionKind::StopSign), 1);
}

TEST(DetectInfractions, RouteDeviationTerminates) {
  WorldState w = make_world(straight(100.0));
  w.ego_route_d = 31.0;
  const auto ev = detect_infractions(w);
  ASSERT_EQ(count_kind(ev, InfractionKind::RouteDeviation), 1);
  EXPECT_TRUE(w.monitor.terminated);
  EXPECT_TRUE(detect_infractions(w).empty());
}

TEST(DetectInfractions, AgentBlockedAfterTimeout) {
  WorldState w = make_world(straight(100.0));
  std::vector<InfractionEvent> all;
  while (w.elapsed() < 95.0) {
    auto ev = advance_world(w, 0.0, 0.0);
    all.insert(all.end(), ev.begin(), ev.end());
  }
  ASSERT_EQ(all.size(), 1u);
  EXPECT_EQ(all[0].kind, InfractionKind::AgentBlocked);
  EXPECT_GT(all[0].tick * w.sim_dt, 90.0);
  EXPECT_LT(all[0].tick * w.sim_dt, 90.2);
}

TEST(DetectInfractions, RedLightRunOnce) {
  WorldState w = make_world(straight(200.0));
  w.map.lights.push_back({50.0, 1'000'000});
  w.ego.speed = 5.0;
  std::vector<InfractionEvent> all;
  while (w.ego_route_s < 100.0) {
    auto ev = advance_world(w, 0.0, 0.0);
    all.insert(all.end(), ev.begin(), ev.end());
  }
  ASSERT_EQ(all.size(), 1u);
  EXPECT_EQ(all[0].kind, InfractionKind::RedLight);
}

TEST(StepWorld, IdenticalRunsAreBitIdentical) {
  ScenarioCatalog cat;
  cat.entries.push_back({"lead", RouteGeometry::Scenario, 250.0, 1, 42, {{ScenarioKind::LeadVehicle, 60.0, 30.0, 0}}});
  cat.entries.push_back({"walker", RouteGeometry::Scenario, 250.0, 1, 43, {{ScenarioKind::CrossingWalker, 50.0, 25.0, 0}}});
  for (const RouteInstance& inst : expand_catalog(cat)) {
    auto run = [&] {
      WorldState w = build_route_world(inst);
      ExpertPolicy expert;
      std::vector<InfractionEvent> all;
      // Deliberately wobbly steering so actors and ego interact.
      for (int i = 0; i < 600; ++i) {
        const ControlCommand c = expert.decide(w).control;
        auto ev = advance_world(w, c.accel, std::clamp(c.steer + 0.05 * std::sin(i * 0.1), -1.2, 1.2));
        all.insert(all.end(), ev.begin(), ev.end());
      }
      return std::make_pair(w, all);
    };
    const auto a = run();
    const auto b = run();
    EXPECT_EQ(a.first, b.first);
    EXPECT_EQ(a.second, b.second);
  }
}

TEST(Footprint, VehicleBoxCentredAheadOfRearAxle) {
  VehicleState s;
  s.pose = Pose2D(1.0, 2.0, kPi / 2);
  const OrientedBox b = s.footprint();
  EXPECT_NEAR(b.center.x, 1.0, 1e-12);
  EXPECT_NEAR(b.center.y, 2.0 + 1.45, 1e-12);
  EXPECT_DOUBLE_EQ(s.front_offset(), 1.45 + 2.45);
}
