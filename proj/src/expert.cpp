#include "drivebench/expert.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "drivebench/error.hpp"
#include "drivebench/routes.hpp"

namespace drivebench {

void ExpertConfig::validate() const {
  idm.validate();
  if (path_points < 2 || waypoints < 2) throw InvalidConfig("expert needs at least 2 path points and 2 waypoints");
  if (!(path_spacing > 0.0) || !(waypoint_dt > 0.0)) throw InvalidConfig("label spacing must be positive");
  if (!(lookahead_min > 0.0) || !(lookahead_time >= 0.0) || !(prediction_horizon >= 0.0) || !(prediction_step > 0.0))
    throw InvalidConfig("expert lookahead settings must be positive");
  if (corridor_margin < 0.0 || clearance_margin < 0.0 || !(max_offset > 0.0) || !(ramp_min > 0.0) ||
      ramp_per_offset < 0.0 || hold_buffer < 0.0)
    throw InvalidConfig("expert detour settings out of range");
  if (!(lateral_accel > 0.0) || !(curve_decel > 0.0)) throw InvalidConfig("expert comfort limits must be positive");
  if (!(pursuit_min > 0.0) || pursuit_max < pursuit_min || pursuit_gain < 0.0)
    throw InvalidConfig("pure-pursuit lookahead range is invalid");
  if (!(target_spacing > 0.0)) throw InvalidConfig("target spacing must be positive");
  if (!(stop_dwell >= 0.0)) throw InvalidConfig("stop dwell must be non-negative");
}

double Detour::offset_at(double s) const {
  if (s <= ramp_in || s >= ramp_out) return 0.0;
  if (s >= hold_begin && s <= hold_end) return offset;
  const double u = s < hold_begin ? (s - ramp_in) / (hold_begin - ramp_in) : (ramp_out - s) / (ramp_out - hold_end);
  return offset * 0.5 * (1.0 - std::cos(kPi * u));
}

double PlannedPath::offset_at(double s) const {
  double best = 0.0;
  for (const auto& d : detours) {
    const double o = d.offset_at(s);
    if (std::abs(o) > std::abs(best)) best = o;
  }
  return best;
}

double PlannedPath::speed_limit_at(double path_s) const {
  const auto& cum = line.cumulative_arclength();
  if (path_s <= 0.0) return speed_limit.front();
  if (path_s >= line.length()) return speed_limit.back();
  const std::size_t i = line.segment_at(path_s);
  const double len = cum[i + 1] - cum[i];
  const double u = len > 0.0 ? (path_s - cum[i]) / len : 0.0;
  return speed_limit[i] + (speed_limit[i + 1] - speed_limit[i]) * u;
}

namespace {

// Point at arc length s, continued along the end tangent past either end.
Vec2 extended_point(const Polyline& line, double s) {
  if (s < 0.0) return line.points().front() + line.tangent_at(0.0) * s;
  if (s > line.length()) return line.points().back() + line.tangent_at(line.length()) * (s - line.length());
  return line.point_at(s);
}

double menger_curvature(const Vec2& a, const Vec2& b, const Vec2& c) {
  const double ab = distance(a, b), bc = distance(b, c), ca = distance(c, a);
  const double denom = ab * bc * ca;
  if (denom < 1e-12) return 0.0;
  return 2.0 * std::abs(cross(b - a, c - a)) / denom;
}

std::vector<double> speed_profile(const Polyline& line, double v_max, const ExpertConfig& cfg) {
  const auto& pts = line.points();
  const auto& cum = line.cumulative_arclength();
  const std::size_t n = pts.size();
  std::vector<double> v(n, v_max);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double k = menger_curvature(pts[i - 1], pts[i], pts[i + 1]);
    if (k > 1e-9) v[i] = std::min(v_max, std::sqrt(cfg.lateral_accel / k));
  }
  for (std::size_t i = n - 1; i-- > 0;) {
    const double ds = cum[i + 1] - cum[i];
    v[i] = std::min(v[i], std::sqrt(v[i + 1] * v[i + 1] + 2.0 * cfg.curve_decel * ds));
  }
  return v;
}

struct Extent {
  double s_min = std::numeric_limits<double>::infinity();
  double s_max = -std::numeric_limits<double>::infinity();
  double d_min = std::numeric_limits<double>::infinity();
  double d_max = -std::numeric_limits<double>::infinity();
};

Extent route_extent(const Polyline& line, const OrientedBox& box) {
  const Projection c = line.project(box.center);
  const double r = box.bounding_radius() + 1.0;
  Extent e;
  for (const Vec2& p : box.corners()) {
    const Projection pr = line.project(p, c.s - r, c.s + r);
    e.s_min = std::min(e.s_min, pr.s);
    e.s_max = std::max(e.s_max, pr.s);
    e.d_min = std::min(e.d_min, pr.d);
    e.d_max = std::max(e.d_max, pr.d);
  }
  return e;
}

}  // namespace

constexpr double kDetourStep = 0.5;  // m between added detour stations

PlannedPath plan_path(const Polyline& route, const WorldState& world, const ExpertConfig& cfg) {
  const double ego_half_width = world.ego.half_extents.y;
  const double corridor = ego_half_width + cfg.corridor_margin;
  const double rear_overhang = world.ego.half_extents.x - world.ego.center_offset();

  std::vector<Detour> detours;
  for (const Actor& a : world.actors) {
    if (a.kind != ActorKind::Static || !a.present) continue;
    const Extent e = route_extent(route, a.footprint());
    if (e.d_max <= -corridor || e.d_min >= corridor) continue;
    if (e.s_max <= 0.0 || e.s_min >= route.length()) continue;
    const double left = e.d_max + ego_half_width + cfg.clearance_margin;
    const double right = e.d_min - ego_half_width - cfg.clearance_margin;
    const double offset = std::abs(left) <= std::abs(right) ? left : right;
    if (std::abs(offset) > cfg.max_offset)
      throw Unplannable("obstacle " + std::to_string(a.id) + " needs a lateral offset of " +
                        std::to_string(std::abs(offset)) + " m (limit " + std::to_string(cfg.max_offset) + " m)");
    Detour d;
    d.offset = offset;
    d.actor_id = a.id;
    d.hold_begin = e.s_min - world.ego.front_offset() - cfg.hold_buffer;
    d.hold_end = e.s_max + rear_overhang + cfg.hold_buffer;
    const double ramp = std::max(cfg.ramp_min, cfg.ramp_per_offset * std::abs(offset));
    d.ramp_in = d.hold_begin - ramp;
    d.ramp_out = d.hold_end + ramp;
    detours.push_back(d);
  }

  PlannedPath plan{route, std::move(detours), {}};
  if (!plan.detours.empty()) {
    const auto& pts = route.points();
    const auto& cum = route.cumulative_arclength();
    // Route vertices plus extra stations inside every detour span, so the
    // offset profile is resolved even on sparsely sampled routes.
    struct Station {
      double s;
      std::size_t vertex;  // npos for stations between vertices
    };
    constexpr std::size_t npos = static_cast<std::size_t>(-1);
    std::vector<Station> stations;
    for (std::size_t i = 0; i < pts.size(); ++i) stations.push_back({cum[i], i});
    for (const Detour& d : plan.detours) {
      const double lo = std::max(0.0, d.ramp_in), hi = std::min(route.length(), d.ramp_out);
      for (double s = lo; s <= hi; s += kDetourStep) stations.push_back({s, npos});
    }
    std::sort(stations.begin(), stations.end(), [](const Station& a, const Station& b) {
      return a.s < b.s || (a.s == b.s && a.vertex < b.vertex);
    });
    std::vector<Vec2> shifted;
    shifted.reserve(stations.size());
    double last_s = -1.0;
    for (const Station& st : stations) {
      if (st.s - last_s < 1e-6) continue;
      last_s = st.s;
      const double o = plan.offset_at(st.s);
      if (st.vertex == npos) {
        shifted.push_back(route_point(route, st.s, o));
        continue;
      }
      const std::size_t i = st.vertex;
      if (o == 0.0) {
        shifted.push_back(pts[i]);
        continue;
      }
      // Vertex normal: average of the adjacent segment tangents.
      Vec2 t{0.0, 0.0};
      if (i > 0) t += (pts[i] - pts[i - 1]) * (1.0 / std::max(1e-12, cum[i] - cum[i - 1]));
      if (i + 1 < pts.size()) t += (pts[i + 1] - pts[i]) * (1.0 / std::max(1e-12, cum[i + 1] - cum[i]));
      const double tn = t.norm();
      const Vec2 n = tn > 0.0 ? Vec2{-t.y / tn, t.x / tn} : Vec2{0.0, 1.0};
      shifted.push_back(pts[i] + n * o);
    }
    plan.line = Polyline(std::move(shifted));
  }
  plan.speed_limit = speed_profile(plan.line, world.map.speed_limit, cfg);
  return plan;
}

namespace {

Direction classify_direction(const WorldState& w, const Actor& a) {
  const Pose2D& ego = w.ego.pose;
  const double c = std::cos(a.pose.yaw - ego.yaw);
  const Vec2 local = ego.to_local(a.pose.position());
  if (c < -0.7) return Direction::Oncoming;
  if (c > 0.85 && std::abs(local.y) < 1.75) return Direction::Front;
  return local.y >= 0.0 ? Direction::Left : Direction::Right;
}

// Footprint of an actor predicted t seconds ahead along its own script path at
// its current speed; static-in-time for actors without a path.
OrientedBox predicted_footprint(const Actor& a, double t) {
  if (!a.path || t == 0.0 || a.speed <= 0.0) return a.footprint();
  const double s = std::min(a.path->length(), a.path_s + a.speed * t);
  return {a.path->point_at(s), a.path->heading_at(s), a.half_extents.x, a.half_extents.y};
}

}  // namespace

Hazard select_leading_object(const WorldState& w, const Polyline& planned, double ego_path_s,
                             const ExpertConfig& cfg) {
  const double v = w.ego.speed;
  const double front_s = ego_path_s + w.ego.front_offset();
  const double horizon = std::max(cfg.lookahead_min, v * cfg.lookahead_time);
  const double corridor = w.ego.half_extents.y + cfg.corridor_margin;

  Hazard best;
  best.gap = std::numeric_limits<double>::infinity();
  auto offer = [&](HazardKind kind, double gap, double closing, Direction dir, int id) {
    gap = std::max(0.0, gap);
    if (gap < best.gap) best = Hazard{kind, gap, closing, dir, id};
  };

  // Corridor as a chain of 1 m boxes along the planned path.
  struct Cell {
    OrientedBox box;
    double s;
  };
  std::vector<Cell> cells;
  const Vec2 ego_pos = w.ego.pose.position();
  const double path_end = planned.length();
  for (double s = front_s - 1.0; s < front_s + horizon; s += 1.0) {
    const double mid = s + 0.5;
    const Vec2 c = extended_point(planned, mid);
    const double yaw = planned.heading_at(std::clamp(mid, 0.0, path_end));
    cells.push_back({{c, yaw, 0.5 + 1e-6, corridor}, s});
  }
  const double reach = w.ego.front_offset() + horizon + 2.0;

  const int steps = static_cast<int>(std::floor(cfg.prediction_horizon / cfg.prediction_step + 1e-9));
  for (const Actor& a : w.actors) {
    if (!a.present || a.kind == ActorKind::Static) continue;
    const bool moving = a.path && a.speed > 0.0;
    const double travel = moving ? a.speed * cfg.prediction_horizon : 0.0;
    if (distance(a.pose.position(), ego_pos) > reach + travel + a.half_extents.norm()) continue;

    double actor_gap = std::numeric_limits<double>::infinity();
    double actor_closing = 0.0;
    for (int k = 0; k <= (moving ? steps : 0); ++k) {
      const OrientedBox box = predicted_footprint(a, k * cfg.prediction_step);
      const auto hit = std::find_if(cells.begin(), cells.end(),
                                    [&](const Cell& c) { return overlaps(c.box, box); });
      if (hit == cells.end()) continue;
      double s_min = std::numeric_limits<double>::infinity();
      const double lo = hit->s - box.bounding_radius() - 2.0;
      const double hi = hit->s + box.bounding_radius() + 2.0;
      for (const Vec2& p : box.corners()) {
        s_min = std::min(s_min, planned.project(p, lo, hi).s);
      }
      // Corners past the end of the planned path project onto its end.
      if (hit->s >= path_end) s_min = std::max(s_min, hit->s);
      const double gap = s_min - front_s;
      if (gap < actor_gap) {
        actor_gap = gap;
        const double rel = box.yaw - planned.heading_at(std::clamp(hit->s, 0.0, path_end));
        actor_closing = v - a.speed * std::cos(rel);
      }
    }
    if (std::isfinite(actor_gap)) {
      const HazardKind kind = a.kind == ActorKind::Walker ? HazardKind::Walker : HazardKind::LeadingVehicle;
      offer(kind, actor_gap, actor_closing, classify_direction(w, a), a.id);
    }
  }

  // Traffic controls are zero-speed virtual leaders at their stop line, in
  // route coordinates.
  const double route_front = w.ego_front_s();
  for (const auto& light : w.map.lights) {
    if (light.phase_at(w.tick) != LightPhase::Red) continue;
    const double gap = light.stop_s - route_front;
    if (gap >= -0.05 && gap <= horizon) offer(HazardKind::RedLight, gap, v, Direction::Front, -1);
  }
  for (std::size_t i = 0; i < w.map.stop_signs.size(); ++i) {
    const bool satisfied = i < w.monitor.stop_satisfied.size() && w.monitor.stop_satisfied[i] &&
                           i < w.monitor.stop_dwell.size() && w.monitor.stop_dwell[i] >= cfg.stop_dwell - 1e-9;
    const bool resolved = i < w.monitor.stop_resolved.size() && w.monitor.stop_resolved[i];
    if (satisfied || resolved) continue;
    const double gap = w.map.stop_signs[i].stop_s - route_front;
    if (gap >= -0.05 && gap <= horizon) offer(HazardKind::StopSign, gap, v, Direction::Front, -1);
  }

  if (!best.present()) best = Hazard{};
  return best;
}

Hazard select_leading_object(const WorldState& w, const Polyline& planned, const ExpertConfig& cfg) {
  return select_leading_object(w, planned, planned.project(w.ego.pose.position()).s, cfg);
}

std::string generate_commentary(const Hazard& hazard, bool swerving, double speed, double planned_accel) {
  if (speed < 0.1 && planned_accel > 0.5) return "starting from stop";
  if (speed < 0.1 && hazard.present()) {
    switch (hazard.kind) {
      case HazardKind::LeadingVehicle: return "stopping for leading vehicle";
      case HazardKind::Walker: return "stopping for walker";
      case HazardKind::RedLight: return "stopping for red light";
      case HazardKind::StopSign: return "stopping for stop sign";
      case HazardKind::None: break;
    }
  }
  if (swerving) return "swerving around obstacle";
  if (hazard.kind == HazardKind::LeadingVehicle && std::abs(planned_accel) <= 0.5)
    return "following the leading vehicle";
  return "keep driving at the same speed";
}

ExpertPolicy::ExpertPolicy(ExpertConfig config) : config_(std::move(config)) { config_.validate(); }

const PlannedPath& ExpertPolicy::planned_path(const WorldState& world) {
  std::vector<int> key;
  for (const Actor& a : world.actors) {
    if (a.kind == ActorKind::Static && a.present) key.push_back(a.id);
  }
  if (!cache_ || cache_route_ != world.map.route.get() || key != cache_key_) {
    cache_ = plan_path(world.route(), world, config_);
    cache_key_ = std::move(key);
    cache_route_ = world.map.route.get();
  }
  return *cache_;
}

ExpertDecision ExpertPolicy::decide(const WorldState& world) {
  const PlannedPath& plan = planned_path(world);
  const VehicleState& ego = world.ego;

  double path_s = world.ego_route_s;
  if (!plan.detours.empty()) {
    path_s = plan.line.project(ego.pose.position(), world.ego_route_s - 10.0, world.ego_route_s + 10.0).s;
  }

  ExpertDecision out;
  out.path_s = path_s;
  out.hazard = select_leading_object(world, plan.line, path_s, config_);
  out.swerving = plan.swerving_at(world.ego_route_s);

  IdmParams idm = config_.idm;
  idm.desired_speed = std::max(0.5, std::min(idm.desired_speed, plan.speed_limit_at(path_s)));
  const IdmResult r = idm_acceleration(ego.speed, out.hazard, idm);
  double accel = r.accel;
  // Standstill hold: IDM alone creeps forward when parked just past s0.
  if (out.hazard.present() && ego.speed < world.config.stop_speed && out.hazard.closing_speed >= 0.0 &&
      out.hazard.gap < idm.min_gap + 1.0)
    accel = std::min(accel, -idm.comfort_decel);
  out.emergency = r.emergency;

  const double ld = std::clamp(config_.pursuit_gain * ego.speed, config_.pursuit_min, config_.pursuit_max);
  const Vec2 target = ego.pose.to_local(extended_point(plan.line, path_s + ld));
  const double dist = std::max(1e-6, target.norm());
  const double alpha = std::atan2(target.y, target.x);
  double steer = std::atan(2.0 * ego.wheelbase * std::sin(alpha) / dist);
  steer = std::clamp(steer, -world.config.max_steer, world.config.max_steer);

  out.control = {steer, accel};
  return out;
}

ExpertStep ExpertPolicy::act(const WorldState& world) {
  const ExpertDecision d = decide(world);
  const PlannedPath& plan = *cache_;
  const Pose2D& pose = world.ego.pose;

  ExpertStep step;
  step.control = d.control;
  ExpertLabels& labels = step.labels;
  labels.hazard = d.hazard;
  labels.swerving = d.swerving;
  labels.commentary = generate_commentary(d.hazard, d.swerving, world.ego.speed, d.control.accel);

  labels.path.reserve(config_.path_points);
  for (int k = 1; k <= config_.path_points; ++k)
    labels.path.push_back(pose.to_local(extended_point(plan.line, d.path_s + k * config_.path_spacing)));

  const auto stations = target_point_stations(0.0, world.route().length(), config_.target_spacing);
  std::size_t next = 0;
  while (next + 1 < stations.size() && stations[next] <= world.ego_route_s) ++next;
  const std::size_t after = std::min(next + 1, stations.size() - 1);
  labels.target_points = {pose.to_local(world.route().point_at(stations[next])),
                          pose.to_local(world.route().point_at(stations[after]))};

  if (config_.waypoint_mode == WaypointMode::Rollout) {
    const int per_wp = std::max(1, static_cast<int>(std::lround(config_.waypoint_dt / world.sim_dt)));
    WorldState sim = world;
    ExpertPolicy shadow = *this;
    ControlCommand c = d.control;
    labels.waypoints.reserve(config_.waypoints);
    for (int k = 1; k <= config_.waypoints; ++k) {
      for (int t = 0; t < per_wp; ++t) {
        if (k > 1 || t > 0) c = shadow.decide(sim).control;
        advance_world(sim, c.accel, c.steer);
      }
      labels.waypoints.push_back(pose.to_local(sim.ego.pose.position()));
    }
  }
  return step;
}

ExpertStep expert_act(const WorldState& world, const ExpertConfig& config) {
  ExpertPolicy policy(config);
  return policy.act(world);
}

}  // namespace drivebench
