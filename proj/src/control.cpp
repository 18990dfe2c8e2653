#include "drivebench/control.hpp"

#include <algorithm>
#include <cmath>

#include "drivebench/error.hpp"

namespace drivebench {

namespace {

bool finite(const Vec2& p) { return std::isfinite(p.x) && std::isfinite(p.y); }

double mean_sq(const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
  if (a.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double dx = a[i].x - b[i].x, dy = a[i].y - b[i].y;
    acc += dx * dx + dy * dy;
  }
  return acc / (2.0 * static_cast<double>(a.size()));
}

}  // namespace

std::vector<Vec2> cumsum_waypoints(std::span<const Vec2> deltas) {
  if (deltas.empty()) throw InvalidInput("cumsum_waypoints: need at least one delta");
  std::vector<Vec2> out;
  out.reserve(deltas.size());
  Vec2 acc{0.0, 0.0};
  for (const Vec2& d : deltas) {
    if (!finite(d)) throw InvalidInput("cumsum_waypoints: non-finite delta");
    acc += d;
    out.push_back(acc);
  }
  return out;
}

std::vector<Vec2> diff_waypoints(std::span<const Vec2> points) {
  std::vector<Vec2> out;
  out.reserve(points.size());
  Vec2 prev{0.0, 0.0};
  for (const Vec2& p : points) {
    if (!finite(p)) throw InvalidInput("diff_waypoints: non-finite point");
    out.push_back(p - prev);
    prev = p;
  }
  return out;
}

MseLoss mse_loss(const DrivingOutput& pred, const DrivingOutput& target) {
  if (pred.path.size() != target.path.size() || pred.waypoints.size() != target.waypoints.size())
    throw InvalidInput("mse_loss: prediction and target shapes differ");
  return {mean_sq(pred.path, target.path), mean_sq(pred.waypoints, target.waypoints)};
}

double Pid::update(double error, double dt) {
  integral_ = std::clamp(integral_ + error * dt, -gains_.integral_limit, gains_.integral_limit);
  const double derivative = primed_ && dt > 0.0 ? (error - prev_error_) / dt : 0.0;
  prev_error_ = error;
  primed_ = true;
  return gains_.kp * error + gains_.ki * integral_ + gains_.kd * derivative;
}

void Pid::reset() {
  integral_ = 0.0;
  prev_error_ = 0.0;
  primed_ = false;
}

void ControllerConfig::validate() const {
  if (!(lookahead_min > 0.0) || lookahead_max < lookahead_min || lookahead_gain < 0.0)
    throw InvalidConfig("controller lookahead range is invalid");
  if (!(waypoint_dt > 0.0) || speed_segments < 1 || !(dt > 0.0))
    throw InvalidConfig("controller timing settings must be positive");
  if (!(max_steer > 0.0) || !(max_accel > 0.0) || !(max_decel > 0.0) || stop_speed < 0.0 || collapsed_waypoint < 0.0)
    throw InvalidConfig("controller limits must be positive");
  for (const PidGains* g : {&lateral, &longitudinal}) {
    if (!(g->integral_limit >= 0.0) || !std::isfinite(g->kp) || !std::isfinite(g->ki) || !std::isfinite(g->kd))
      throw InvalidConfig("PID gains must be finite with a non-negative integral limit");
  }
}

Vec2 path_lookahead_point(std::span<const Vec2> path, double radius) {
  if (path.empty()) throw PathDegenerate("empty path");
  if (path[0].norm() >= radius) return path[0];
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const Vec2 a = path[i], b = path[i + 1];
    if (b.norm() < radius) continue;
    // Solve |a + t (b - a)| = radius for t in [0, 1]; a is inside, b outside.
    const Vec2 d = b - a;
    const double qa = dot(d, d);
    if (qa <= 0.0) continue;
    const double qb = 2.0 * dot(a, d);
    const double qc = dot(a, a) - radius * radius;
    const double t = (-qb + std::sqrt(std::max(0.0, qb * qb - 4.0 * qa * qc))) / (2.0 * qa);
    return a + d * std::clamp(t, 0.0, 1.0);
  }
  return path.back();
}

double lateral_pid(const DrivingOutput& output, double speed, Pid& pid, const ControllerConfig& cfg) {
  const auto& path = output.path;
  if (path.size() < 2) throw PathDegenerate("lateral control needs at least 2 path points");
  const bool degenerate =
      std::all_of(path.begin(), path.end(), [&](const Vec2& p) { return distance(p, path.front()) < 1e-9; });
  if (degenerate) throw PathDegenerate("all path points coincide");

  const double d_la = std::clamp(cfg.lookahead_gain * speed, cfg.lookahead_min, cfg.lookahead_max);
  const Vec2 target = path_lookahead_point(path, d_la);
  const double error = std::atan2(target.y, target.x);
  return std::clamp(pid.update(error, cfg.dt), -cfg.max_steer, cfg.max_steer);
}

double waypoint_target_speed(std::span<const Vec2> waypoints, const ControllerConfig& cfg) {
  const int k = std::min<int>(cfg.speed_segments, static_cast<int>(waypoints.size()) - 1);
  if (k <= 0) return 0.0;
  double acc = 0.0;
  for (int i = 0; i < k; ++i) acc += distance(waypoints[i + 1], waypoints[i]);
  return acc / (k * cfg.waypoint_dt);
}

namespace {

double longitudinal_from_waypoints(std::span<const Vec2> waypoints, double speed, Pid& pid,
                                   const ControllerConfig& cfg) {
  if (waypoints.size() < 2) throw InvalidInput("longitudinal control needs at least 2 waypoints");
  const double target = waypoint_target_speed(waypoints, cfg);
  if (target < cfg.stop_speed) {
    pid.reset();
    return -cfg.max_decel;
  }
  return std::clamp(pid.update(target - speed, cfg.dt), -cfg.max_decel, cfg.max_accel);
}

}  // namespace

double longitudinal_pid(const DrivingOutput& output, double speed, Pid& pid, const ControllerConfig& cfg) {
  return longitudinal_from_waypoints(output.waypoints, speed, pid, cfg);
}

ControlCommand semi_disentangled_control(const DrivingOutput& output, double speed, ControllerState& state,
                                         const ControllerConfig& cfg) {
  return {lateral_pid(output, speed, state.lateral, cfg), longitudinal_pid(output, speed, state.longitudinal, cfg)};
}

ControlCommand entangled_control(std::span<const Vec2> waypoints, double speed, ControllerState& state,
                                 const ControllerConfig& cfg) {
  if (waypoints.size() < 2) throw InvalidInput("entangled control needs at least 2 waypoints");
  double steer = 0.0;
  const Vec2 aim = waypoints[1];
  if (aim.norm() >= cfg.collapsed_waypoint) {
    steer = std::clamp(state.lateral.update(std::atan2(aim.y, aim.x), cfg.dt), -cfg.max_steer, cfg.max_steer);
  } else {
    state.lateral.reset();
  }
  return {steer, longitudinal_from_waypoints(waypoints, speed, state.longitudinal, cfg)};
}

StopDecision early_stop_filter(StopPolicy& policy, double steer, double ego_s, bool in_intersection) {
  if (policy.stopped) return StopDecision::Stop;
  policy.distance_travelled = std::max(policy.distance_travelled, ego_s);
  if (policy.distance_travelled >= policy.distance_threshold && std::abs(steer) < policy.steer_epsilon &&
      !in_intersection) {
    policy.stopped = true;
    return StopDecision::Stop;
  }
  return StopDecision::Continue;
}

TokenBudget compute_token_budget(int image_w, int image_h, int tile, int patch, int downsample, bool include_global) {
  if (image_w <= 0 || image_h <= 0 || tile <= 0 || patch <= 0)
    throw InvalidConfig("image, tile and patch sizes must be positive");
  if (tile % patch != 0) throw InvalidConfig("tile size must be a multiple of the patch size");
  if (downsample < 1) throw InvalidConfig("downsample factor must be at least 1");
  TokenBudget b;
  b.tiles = ((image_w + tile - 1) / tile) * ((image_h + tile - 1) / tile) + (include_global ? 1 : 0);
  const long long per_tile = static_cast<long long>(tile / patch) * (tile / patch);
  b.tokens_pre = b.tiles * per_tile;
  if (b.tokens_pre % downsample != 0)
    throw InvalidConfig("downsample factor does not divide the token count " + std::to_string(b.tokens_pre));
  b.tokens_post = b.tokens_pre / downsample;
  return b;
}

}  // namespace drivebench
