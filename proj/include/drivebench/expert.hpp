#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "drivebench/geometry.hpp"
#include "drivebench/idm.hpp"
#include "drivebench/world.hpp"

namespace drivebench {

enum class WaypointMode { Rollout, RecordedFuture };

struct ExpertConfig {
  IdmParams idm;

  int path_points = 20;        ///< N
  double path_spacing = 1.0;   ///< m
  int waypoints = 8;           ///< M
  double waypoint_dt = 0.25;   ///< s
  WaypointMode waypoint_mode = WaypointMode::Rollout;

  double corridor_margin = 0.5;     ///< m each side of the ego width
  double lookahead_min = 20.0;      ///< m
  double lookahead_time = 4.0;      ///< s
  double prediction_horizon = 4.0;  ///< s, crossing-actor extrapolation
  double prediction_step = 0.25;    ///< s

  double clearance_margin = 0.5;  ///< m kept from obstacles when swerving
  double max_offset = 4.0;        ///< m, drivable lateral margin
  double ramp_min = 15.0;         ///< m
  double ramp_per_offset = 8.0;   ///< m of ramp per m of offset
  double hold_buffer = 3.0;       ///< m before and after the obstacle

  double lateral_accel = 2.0;  ///< m/s^2 cap for curve speed
  double curve_decel = 1.5;    ///< m/s^2 used to anticipate curves
  double pursuit_gain = 1.0;   ///< s, pure-pursuit lookahead per m/s
  double pursuit_min = 3.0;    ///< m
  double pursuit_max = 12.0;   ///< m

  double target_spacing = 200.0;  ///< m between route target points
  double stop_dwell = 1.0;        ///< s to stay halted at a stop sign before moving on

  void validate() const;
  bool operator==(const ExpertConfig&) const = default;
};

/// Lateral detour around one blocking obstacle; raised-cosine ramps on both
/// sides of a constant-offset hold section. Stations are route arc lengths.
struct Detour {
  double ramp_in = 0.0;
  double hold_begin = 0.0;
  double hold_end = 0.0;
  double ramp_out = 0.0;
  double offset = 0.0;  ///< signed, left positive
  int actor_id = -1;

  double offset_at(double s) const;
};

/// The expert's intended path: the route centreline, shifted around blocking
/// static obstacles, plus a curvature-limited speed profile per vertex.
struct PlannedPath {
  Polyline line;
  std::vector<Detour> detours;
  std::vector<double> speed_limit;

  /// Offset from the route at route station s.
  double offset_at(double s) const;
  double speed_limit_at(double path_s) const;
  bool swerving_at(double route_s) const { return std::abs(offset_at(route_s)) > 0.1; }
};

/// Detours around every present static actor overlapping the driving
/// corridor. Throws Unplannable when a detour would exceed max_offset.
PlannedPath plan_path(const Polyline& route, const WorldState& world, const ExpertConfig& config);

/// Nearest vehicle, walker or traffic control ahead within the lookahead.
/// `ego_path_s` is the rear-axle station on `planned`.
Hazard select_leading_object(const WorldState& world, const Polyline& planned, double ego_path_s,
                             const ExpertConfig& config);
Hazard select_leading_object(const WorldState& world, const Polyline& planned, const ExpertConfig& config);

struct ExpertLabels {
  std::vector<Vec2> path;       ///< N ego-frame points, space-conditioned
  std::vector<Vec2> waypoints;  ///< M ego-frame points, time-conditioned
  std::string commentary;
  Hazard hazard;
  bool swerving = false;
  std::array<Vec2, 2> target_points{};  ///< next two route target points, ego frame

  bool operator==(const ExpertLabels&) const = default;
};

struct ExpertDecision {
  ControlCommand control;
  Hazard hazard;
  bool emergency = false;
  bool swerving = false;
  double path_s = 0.0;
};

struct ExpertStep {
  ControlCommand control;
  ExpertLabels labels;
};

/// Template commentary for the expert's current intention.
std::string generate_commentary(const Hazard& hazard, bool swerving, double speed, double planned_accel);

/// Privileged rule-based driver. Holds a per-episode cache of the planned
/// path, so one instance must not be shared between concurrent episodes.
class ExpertPolicy {
 public:
  explicit ExpertPolicy(ExpertConfig config = {});

  const ExpertConfig& config() const { return config_; }

  /// Control only; cheap enough to call every tick.
  ExpertDecision decide(const WorldState& world);
  /// Control plus labels. In rollout mode the waypoints come from driving a
  /// private copy of the world forward M * waypoint_dt seconds; in
  /// recorded-future mode they are left empty for the recorder to fill.
  ExpertStep act(const WorldState& world);

  const PlannedPath& planned_path(const WorldState& world);

 private:
  ExpertConfig config_;
  std::vector<int> cache_key_;
  std::optional<PlannedPath> cache_;
  const Polyline* cache_route_ = nullptr;
};

/// One-shot convenience wrapper around ExpertPolicy::act.
ExpertStep expert_act(const WorldState& world, const ExpertConfig& config = {});

}  // namespace drivebench
