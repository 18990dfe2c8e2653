#pragma once

#include <cstdint>
#include <memory>
#include <string_view>
#include <vector>

#include "drivebench/geometry.hpp"
#include "drivebench/idm.hpp"
#include "drivebench/vehicle.hpp"

namespace drivebench {

enum class ScenarioKind {
  LeadVehicle,
  CrossingWalker,
  RedLight,
  StopSign,
  StaticObstacleSwerve,
  MergeFromLeft,
  MergeFromRight,
  OncomingVehicle,
  OpeningDoor,
};

inline constexpr ScenarioKind kAllScenarioKinds[] = {
    ScenarioKind::LeadVehicle,     ScenarioKind::CrossingWalker, ScenarioKind::RedLight,
    ScenarioKind::StopSign,        ScenarioKind::StaticObstacleSwerve, ScenarioKind::MergeFromLeft,
    ScenarioKind::MergeFromRight,  ScenarioKind::OncomingVehicle, ScenarioKind::OpeningDoor,
};

std::string_view to_string(ScenarioKind k);
ScenarioKind scenario_kind_from_string(std::string_view s);

/// One scripted situation on a route. `distance_param` is the nominal
/// scenario geometry (gap to the lead car, trigger-to-walker distance, ...);
/// the built world uses a seeded +/-10% perturbation of it.
struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::LeadVehicle;
  double trigger_distance = 0.0;  ///< m along the route
  double distance_param = 0.0;    ///< m
  std::uint64_t seed = 0;

  bool operator==(const ScenarioSpec&) const = default;
};

enum class InfractionKind {
  CollisionPedestrian,
  CollisionVehicle,
  CollisionStatic,
  RedLight,
  StopSign,
  RouteDeviation,
  AgentBlocked,
};

inline constexpr InfractionKind kAllInfractionKinds[] = {
    InfractionKind::CollisionPedestrian, InfractionKind::CollisionVehicle,
    InfractionKind::CollisionStatic,     InfractionKind::RedLight,
    InfractionKind::StopSign,            InfractionKind::RouteDeviation,
    InfractionKind::AgentBlocked,
};

std::string_view to_string(InfractionKind k);
InfractionKind infraction_kind_from_string(std::string_view s);
/// Terminal infractions end the episode instead of scaling the score.
constexpr bool is_terminal(InfractionKind k) {
  return k == InfractionKind::RouteDeviation || k == InfractionKind::AgentBlocked;
}

struct InfractionEvent {
  InfractionKind kind = InfractionKind::CollisionStatic;
  int tick = 0;
  double route_s = 0.0;
  int actor_id = -1;

  bool operator==(const InfractionEvent&) const = default;
};

enum class ActorKind { Vehicle, Walker, Static };

enum class ScriptPhase { Waiting, Cruising, Braking, Holding, Finished };

/// A scripted scenario participant. Poses are footprint centres.
struct Actor {
  int id = 0;
  ActorKind kind = ActorKind::Static;
  Pose2D pose;
  double speed = 0.0;
  Vec2 half_extents{0.5, 0.5};

  std::shared_ptr<const Polyline> path;  ///< null for static actors
  double path_s = 0.0;
  double cruise_speed = 0.0;

  double trigger_s = -1.0;  ///< ego route arc length that fires the script; < 0 fires at once
  bool triggered = false;
  bool present = true;      ///< absent actors are not simulated and cannot collide
  bool appear_on_trigger = false;
  bool moves_before_trigger = false;
  bool idm_follow = false;  ///< vehicles car-follow whatever is ahead on their path

  double brake_decel = 0.0;  ///< > 0 enables a brake-to-stop event on trigger
  double brake_hold = 0.0;   ///< s spent stopped before resuming
  double hold_timer = 0.0;
  ScriptPhase phase = ScriptPhase::Waiting;

  OrientedBox footprint() const { return {pose.position(), pose.yaw, half_extents.x, half_extents.y}; }
  bool operator==(const Actor& o) const;
};

enum class LightPhase { Red, Green };

/// Single red-to-green switch at `green_from_tick`; before it the light is red.
struct TrafficLight {
  double stop_s = 0.0;
  int green_from_tick = 0;
  LightPhase phase_at(int tick) const { return tick < green_from_tick ? LightPhase::Red : LightPhase::Green; }
  bool operator==(const TrafficLight&) const = default;
};

/// The stop is satisfied when the front bumper is within
/// [stop_s - zone_length, stop_s] while the speed is below the threshold.
struct StopSign {
  double stop_s = 0.0;
  double zone_length = 8.0;
  bool operator==(const StopSign&) const = default;
};

struct IntersectionZone {
  Polygon polygon;
  double s_begin = 0.0;
  double s_end = 0.0;
  bool operator==(const IntersectionZone&) const = default;
};

struct MapFeatures {
  std::shared_ptr<const Polyline> route;
  std::vector<TrafficLight> lights;
  std::vector<StopSign> stop_signs;
  std::vector<IntersectionZone> intersections;
  double speed_limit = 8.3;  ///< m/s

  bool operator==(const MapFeatures& o) const;
};

struct WorldConfig {
  double sim_dt = 0.05;
  int record_every = 4;
  double stop_speed = 0.1;           ///< stop-sign satisfaction and blocked detection
  double deviation_limit = 30.0;     ///< m of lateral offset
  double blocked_timeout = 90.0;     ///< s
  double max_steer = kDefaultMaxSteer;
  double wheelbase = 2.9;
  double length = 4.9;
  double width = 2.1;

  void validate() const;
  bool operator==(const WorldConfig&) const = default;
};

/// Bookkeeping that turns instantaneous conditions into de-duplicated events.
struct InfractionMonitor {
  std::vector<int> contacts;               ///< actor ids overlapping the ego
  std::vector<bool> stop_satisfied;        ///< per stop sign
  std::vector<bool> stop_resolved;         ///< per stop sign: front passed the line
  std::vector<double> stop_dwell;          ///< per stop sign: s spent stationary inside the zone
  double prev_front_s = 0.0;
  double blocked_time = 0.0;
  bool terminated = false;

  bool operator==(const InfractionMonitor&) const = default;
};

struct ScenarioInstance {
  ScenarioSpec spec;
  double distance = 0.0;  ///< perturbed distance_param actually used
  bool operator==(const ScenarioInstance&) const = default;
};

struct WorldState {
  int tick = 0;
  double sim_dt = 0.05;
  VehicleState ego;
  std::vector<Actor> actors;
  MapFeatures map;
  std::vector<ScenarioInstance> scenarios;
  WorldConfig config;

  double ego_route_s = 0.0;  ///< rear-axle arc length on the route
  double ego_route_d = 0.0;  ///< signed lateral offset from the route
  double odometer = 0.0;     ///< m driven
  InfractionMonitor monitor;

  double elapsed() const { return tick * sim_dt; }
  double ego_front_s() const { return ego_route_s + ego.front_offset(); }
  const Polyline& route() const { return *map.route; }
  bool in_intersection() const;
  bool operator==(const WorldState& o) const;
};

/// Empty world with the ego at rest at the route start.
WorldState make_world(std::shared_ptr<const Polyline> route, const WorldConfig& config = {});

/// Adds one scenario's actors and map features to `world`. The ScenarioSpec
/// seed stream and `rng_seed` drive the +/-10% distance perturbation and any
/// other random choices. Throws InvalidSpec when the scenario does not fit.
void add_scenario(WorldState& world, const ScenarioSpec& spec, std::uint64_t rng_seed);

/// Route world containing a single scenario.
WorldState build_scenario(const ScenarioSpec& spec, std::shared_ptr<const Polyline> route,
                          std::uint64_t rng_seed, const WorldConfig& config = {});

/// Detects infractions in the current state and updates the monitor. Events
/// are emitted once per contact / crossing.
std::vector<InfractionEvent> detect_infractions(WorldState& world);

/// Advances the world by one tick in place and returns the new events.
std::vector<InfractionEvent> advance_world(WorldState& world, double ego_accel, double ego_steer);

struct StepResult {
  WorldState world;
  std::vector<InfractionEvent> events;
};

/// Value-returning form of advance_world.
StepResult step_world(WorldState world, double ego_accel, double ego_steer);

/// Route point at arc length s shifted by d along the left normal.
Vec2 route_point(const Polyline& route, double s, double d = 0.0);

}  // namespace drivebench
