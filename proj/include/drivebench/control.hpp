#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "drivebench/geometry.hpp"
#include "drivebench/vehicle.hpp"

namespace drivebench {

/// Model output contract: N space-conditioned path points and M
/// time-conditioned waypoints, both in the ego frame.
struct DrivingOutput {
  std::vector<Vec2> path;
  std::vector<Vec2> waypoints;
  std::optional<std::string> commentary;

  bool operator==(const DrivingOutput&) const = default;
};

/// Waypoint head: out[k] = sum of deltas[0..k]. Throws InvalidInput on
/// empty or non-finite input.
std::vector<Vec2> cumsum_waypoints(std::span<const Vec2> deltas);
/// Inverse of cumsum_waypoints.
std::vector<Vec2> diff_waypoints(std::span<const Vec2> points);

struct MseLoss {
  double path = 0.0;
  double waypoints = 0.0;
};

/// Mean over points and coordinates of the squared error. Throws
/// InvalidInput on shape mismatch.
MseLoss mse_loss(const DrivingOutput& pred, const DrivingOutput& target);

struct PidGains {
  double kp = 0.0;
  double ki = 0.0;
  double kd = 0.0;
  double integral_limit = 2.0;  ///< anti-windup bound on |I|
  bool operator==(const PidGains&) const = default;
};

class Pid {
 public:
  explicit Pid(PidGains gains = {}) : gains_(gains) {}

  /// One update. The derivative term is zero on the first call after reset.
  double update(double error, double dt);
  void reset();

  const PidGains& gains() const { return gains_; }
  double integral() const { return integral_; }

 private:
  PidGains gains_;
  double integral_ = 0.0;
  double prev_error_ = 0.0;
  bool primed_ = false;
};

struct ControllerConfig {
  PidGains lateral{1.2, 0.0, 0.3, 2.0};
  PidGains longitudinal{1.0, 0.05, 0.0, 2.0};
  double lookahead_gain = 0.6;  ///< s; d_la = clamp(gain * speed, min, max)
  double lookahead_min = 2.4;   ///< m
  double lookahead_max = 10.0;  ///< m
  double waypoint_dt = 0.25;    ///< s between time-conditioned waypoints
  int speed_segments = 2;       ///< K waypoint gaps averaged into the target speed
  double stop_speed = 0.1;      ///< target speeds below this brake at the limit
  double max_steer = kDefaultMaxSteer;
  double max_accel = 2.0;
  double max_decel = 8.0;
  double collapsed_waypoint = 0.05;  ///< m; entangled steering gives up below this
  double dt = 0.05;                  ///< controller update period

  void validate() const;
  bool operator==(const ControllerConfig&) const = default;
};

/// Point on an ego-frame path at Euclidean distance `radius` from the origin:
/// the first crossing of that circle, path[0] when the path starts outside it,
/// otherwise the final point.
Vec2 path_lookahead_point(std::span<const Vec2> path, double radius);

/// Lateral controller on the space-conditioned path. Error is the bearing
/// from the ego +x axis to the lookahead point. Throws PathDegenerate when
/// every path point coincides.
double lateral_pid(const DrivingOutput& output, double speed, Pid& pid, const ControllerConfig& cfg = {});

/// Mean of |wp[k+1] - wp[k]| / waypoint_dt over the first K gaps.
double waypoint_target_speed(std::span<const Vec2> waypoints, const ControllerConfig& cfg = {});

/// Longitudinal controller on the time-conditioned waypoints.
double longitudinal_pid(const DrivingOutput& output, double speed, Pid& pid, const ControllerConfig& cfg = {});

/// Per-episode controller state for the two PID loops.
struct ControllerState {
  Pid lateral;
  Pid longitudinal;
  explicit ControllerState(const ControllerConfig& cfg = {}) : lateral(cfg.lateral), longitudinal(cfg.longitudinal) {}
};

/// Semi-disentangled control: path steers, waypoints set the speed.
ControlCommand semi_disentangled_control(const DrivingOutput& output, double speed, ControllerState& state,
                                         const ControllerConfig& cfg = {});

/// Baseline where the time-conditioned waypoints drive both loops. Steering
/// uses the bearing to wp[1] and falls back to 0 when that waypoint has
/// collapsed onto the ego.
ControlCommand entangled_control(std::span<const Vec2> waypoints, double speed, ControllerState& state,
                                 const ControllerConfig& cfg = {});

/// Halts a route once enough distance has been covered, only when the wheel
/// is near straight and outside intersections. Stays stopped once triggered.
struct StopPolicy {
  double distance_threshold = 2100.0;  ///< m
  double steer_epsilon = 0.02;         ///< rad
  double distance_travelled = 0.0;
  bool stopped = false;
};

enum class StopDecision { Continue, Stop };

/// `ego_s` is the distance driven so far; it only ever raises the
/// accumulator.
StopDecision early_stop_filter(StopPolicy& policy, double steer, double ego_s, bool in_intersection);

struct TokenBudget {
  int tiles = 0;
  long long tokens_pre = 0;
  long long tokens_post = 0;
  bool operator==(const TokenBudget&) const = default;
};

/// anyres tiling arithmetic. Throws InvalidConfig when the tile is not a
/// multiple of the patch or the downsample does not divide the token count.
TokenBudget compute_token_budget(int image_w, int image_h, int tile = 336, int patch = 14, int downsample = 2,
                                 bool include_global = false);

}  // namespace drivebench
