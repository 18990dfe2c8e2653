#include "drivebench/world.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "drivebench/error.hpp"
#include "drivebench/random.hpp"

namespace drivebench {

std::string_view to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::LeadVehicle: return "lead_vehicle";
    case ScenarioKind::CrossingWalker: return "crossing_walker";
    case ScenarioKind::RedLight: return "red_light";
    case ScenarioKind::StopSign: return "stop_sign";
    case ScenarioKind::StaticObstacleSwerve: return "static_obstacle_swerve";
    case ScenarioKind::MergeFromLeft: return "merge_from_left";
    case ScenarioKind::MergeFromRight: return "merge_from_right";
    case ScenarioKind::OncomingVehicle: return "oncoming_vehicle";
    case ScenarioKind::OpeningDoor: return "opening_door";
  }
  return "lead_vehicle";
}

ScenarioKind scenario_kind_from_string(std::string_view s) {
  for (auto k : kAllScenarioKinds) {
    if (to_string(k) == s) return k;
  }
  throw ParseError("unknown scenario kind '" + std::string(s) + "'");
}

std::string_view to_string(InfractionKind k) {
  switch (k) {
    case InfractionKind::CollisionPedestrian: return "collision_pedestrian";
    case InfractionKind::CollisionVehicle: return "collision_vehicle";
    case InfractionKind::CollisionStatic: return "collision_static";
    case InfractionKind::RedLight: return "red_light";
    case InfractionKind::StopSign: return "stop_sign";
    case InfractionKind::RouteDeviation: return "route_deviation";
    case InfractionKind::AgentBlocked: return "agent_blocked";
  }
  return "collision_static";
}

InfractionKind infraction_kind_from_string(std::string_view s) {
  for (auto k : kAllInfractionKinds) {
    if (to_string(k) == s) return k;
  }
  throw ParseError("unknown infraction kind '" + std::string(s) + "'");
}

bool Actor::operator==(const Actor& o) const {
  const bool same_path = (path == o.path) || (path && o.path && *path == *o.path);
  return same_path && id == o.id && kind == o.kind && pose == o.pose && speed == o.speed &&
         half_extents == o.half_extents && path_s == o.path_s && cruise_speed == o.cruise_speed &&
         trigger_s == o.trigger_s && triggered == o.triggered && present == o.present &&
         appear_on_trigger == o.appear_on_trigger && moves_before_trigger == o.moves_before_trigger &&
         idm_follow == o.idm_follow && brake_decel == o.brake_decel && brake_hold == o.brake_hold &&
         hold_timer == o.hold_timer && phase == o.phase;
}

bool MapFeatures::operator==(const MapFeatures& o) const {
  const bool same_route = (route == o.route) || (route && o.route && *route == *o.route);
  return same_route && lights == o.lights && stop_signs == o.stop_signs &&
         intersections == o.intersections && speed_limit == o.speed_limit;
}

bool WorldState::operator==(const WorldState& o) const {
  return tick == o.tick && sim_dt == o.sim_dt && ego == o.ego && actors == o.actors && map == o.map &&
         scenarios == o.scenarios && config == o.config && ego_route_s == o.ego_route_s &&
         ego_route_d == o.ego_route_d && odometer == o.odometer && monitor == o.monitor;
}

bool WorldState::in_intersection() const {
  const Vec2 c = ego.footprint().center;
  return std::any_of(map.intersections.begin(), map.intersections.end(),
                     [&](const IntersectionZone& z) { return z.polygon.contains(c); });
}

void WorldConfig::validate() const {
  if (!(sim_dt > 0.0) || record_every < 1 || !(stop_speed > 0.0) || !(deviation_limit > 0.0) ||
      !(blocked_timeout > 0.0) || !(max_steer > 0.0) || !(wheelbase > 0.0) || !(length > 0.0) ||
      !(width > 0.0))
    throw InvalidConfig("world configuration values must be positive");
}

Vec2 route_point(const Polyline& route, double s, double d) {
  const Vec2 t = route.tangent_at(s);
  return route.point_at(s) + Vec2{-t.y, t.x} * d;
}

WorldState make_world(std::shared_ptr<const Polyline> route, const WorldConfig& config) {
  if (!route) throw InvalidInput("make_world: route is null");
  config.validate();
  WorldState w;
  w.sim_dt = config.sim_dt;
  w.config = config;
  w.ego.wheelbase = config.wheelbase;
  w.ego.half_extents = {0.5 * config.length, 0.5 * config.width};
  w.ego.pose = Pose2D(route->points().front(), route->heading_at(0.0));
  w.map.route = std::move(route);
  w.monitor.prev_front_s = w.ego_front_s();
  return w;
}

namespace {

Pose2D route_pose(const Polyline& route, double s, double d) {
  return Pose2D(route_point(route, s, d), route.heading_at(s));
}

std::vector<Vec2> cubic_bezier(const Vec2& p0, const Vec2& p1, const Vec2& p2, const Vec2& p3, int n) {
  std::vector<Vec2> out;
  for (int i = 0; i <= n; ++i) {
    const double t = static_cast<double>(i) / n;
    const double u = 1.0 - t;
    out.push_back(p0 * (u * u * u) + p1 * (3 * u * u * t) + p2 * (3 * u * t * t) + p3 * (t * t * t));
  }
  return out;
}

void append_points(std::vector<Vec2>& dst, const std::vector<Vec2>& src) {
  for (const auto& p : src) {
    if (dst.empty() || distance(dst.back(), p) > 1e-9) dst.push_back(p);
  }
}

IntersectionZone make_zone(const Polyline& route, double s0, double s1, double half_width) {
  s0 = std::clamp(s0, 0.0, route.length());
  s1 = std::clamp(s1, 0.0, route.length());
  IntersectionZone z{{}, s0, s1};
  std::vector<Vec2> left, right;
  const int n = std::max(2, static_cast<int>(std::ceil(s1 - s0)) + 1);
  for (int i = 0; i < n; ++i) {
    const double s = s0 + (s1 - s0) * i / (n - 1);
    left.push_back(route_point(route, s, half_width));
    right.push_back(route_point(route, s, -half_width));
  }
  z.polygon.vertices = left;
  z.polygon.vertices.insert(z.polygon.vertices.end(), right.rbegin(), right.rend());
  return z;
}

Actor& new_actor(WorldState& w, ActorKind kind) {
  Actor a;
  a.id = static_cast<int>(w.actors.size()) + 1;
  a.kind = kind;
  w.actors.push_back(a);
  return w.actors.back();
}

void place_on_path(Actor& a) {
  a.pose = Pose2D(a.path->point_at(a.path_s), a.path->heading_at(a.path_s));
}

// Stream tag so scenarios sharing a seed still draw independently.
std::uint64_t scenario_stream(const ScenarioSpec& spec, std::size_t index) {
  return (spec.seed * 1000003ULL) ^ (static_cast<std::uint64_t>(spec.kind) << 48) ^ (index + 1);
}

void require_inside(const Polyline& route, double s, const ScenarioSpec& spec) {
  if (s < 0.0 || s > route.length())
    throw InvalidSpec(std::string(to_string(spec.kind)) + ": scenario geometry at s=" + std::to_string(s) +
                      " lies outside the route (length " + std::to_string(route.length()) + ")");
}

}  // namespace

void add_scenario(WorldState& w, const ScenarioSpec& spec, std::uint64_t rng_seed) {
  const Polyline& route = *w.map.route;
  if (!std::isfinite(spec.trigger_distance) || spec.trigger_distance < 0.0 ||
      spec.trigger_distance > route.length())
    throw InvalidSpec("trigger distance " + std::to_string(spec.trigger_distance) + " beyond route end");
  if (!(spec.distance_param > 0.0)) throw InvalidSpec("distance_param must be positive");

  auto rng = make_rng(rng_seed, scenario_stream(spec, w.scenarios.size()));
  const double dist = spec.distance_param * uniform(rng, 0.9, 1.1);
  const double side = uniform01(rng) < 0.5 ? 1.0 : -1.0;
  const double trig = spec.trigger_distance;
  const double v_nominal = w.map.speed_limit;

  switch (spec.kind) {
    case ScenarioKind::LeadVehicle: {
      // Cruises from the start `dist` ahead of the ego; brakes to a stop when
      // the ego reaches the trigger, waits, then resumes.
      require_inside(route, dist, spec);
      Actor& a = new_actor(w, ActorKind::Vehicle);
      a.path = w.map.route;
      a.path_s = dist;
      a.half_extents = {2.35, 1.0};
      a.cruise_speed = 0.6 * v_nominal;
      a.speed = a.cruise_speed;
      a.moves_before_trigger = true;
      a.phase = ScriptPhase::Cruising;
      a.idm_follow = true;
      a.trigger_s = trig;
      a.brake_decel = 3.5;
      a.brake_hold = 2.0;
      place_on_path(a);
      break;
    }
    case ScenarioKind::CrossingWalker: {
      const double s_w = trig + dist;
      require_inside(route, s_w + 10.0, spec);
      Actor& a = new_actor(w, ActorKind::Walker);
      a.path = std::make_shared<const Polyline>(
          std::vector<Vec2>{route_point(route, s_w, side * 6.0), route_point(route, s_w, -side * 6.0)});
      a.half_extents = {0.3, 0.3};
      a.cruise_speed = 1.4;
      a.trigger_s = trig;
      place_on_path(a);
      break;
    }
    case ScenarioKind::RedLight: {
      require_inside(route, trig + dist, spec);
      // Red until the nominal arrival time plus a dwell, so a nominal ego has
      // to stop.
      const double accel_time = v_nominal / 2.0;
      const double arrival = accel_time + std::max(0.0, trig - 0.5 * v_nominal * accel_time) / v_nominal;
      const double green_at = arrival + 4.0;
      w.map.lights.push_back({trig, static_cast<int>(std::lround(green_at / w.sim_dt))});
      w.map.intersections.push_back(make_zone(route, trig, trig + dist, 8.0));
      break;
    }
    case ScenarioKind::StopSign: {
      require_inside(route, trig + dist, spec);
      w.map.stop_signs.push_back({trig, 8.0});
      w.monitor.stop_satisfied.push_back(false);
      w.monitor.stop_resolved.push_back(false);
      w.monitor.stop_dwell.push_back(0.0);
      w.map.intersections.push_back(make_zone(route, trig, trig + dist, 8.0));
      break;
    }
    case ScenarioKind::StaticObstacleSwerve: {
      const double s_o = trig + dist;
      require_inside(route, s_o + 30.0, spec);
      Actor& a = new_actor(w, ActorKind::Static);
      a.pose = route_pose(route, s_o, 0.0);
      a.half_extents = {2.0, 1.0};
      a.triggered = true;
      break;
    }
    case ScenarioKind::MergeFromLeft:
    case ScenarioKind::MergeFromRight: {
      const double merge_side = spec.kind == ScenarioKind::MergeFromLeft ? 1.0 : -1.0;
      const double s_m = trig + dist;
      require_inside(route, s_m + 10.0, spec);
      if (s_m < 35.0) throw InvalidSpec("merge point too close to the route start");
      std::vector<Vec2> pts = cubic_bezier(
          route_point(route, s_m - 35.0, merge_side * 14.0), route_point(route, s_m - 20.0, merge_side * 14.0),
          route_point(route, s_m - 12.0, 0.0), route_point(route, s_m, 0.0), 30);
      const Polyline tail = route.slice(s_m, route.length());
      append_points(pts, tail.points());
      Actor& a = new_actor(w, ActorKind::Vehicle);
      a.path = std::make_shared<const Polyline>(std::move(pts));
      a.half_extents = {2.35, 1.0};
      a.cruise_speed = 0.7 * v_nominal;
      a.idm_follow = true;
      a.trigger_s = trig;
      place_on_path(a);
      break;
    }
    case ScenarioKind::OncomingVehicle: {
      // Oncoming car turning across the ego lane into a side street.
      const double s_c = trig + dist;
      require_inside(route, s_c + 45.0, spec);
      std::vector<Vec2> pts{route_point(route, s_c + 45.0, 3.5)};
      append_points(pts, cubic_bezier(route_point(route, s_c + 9.0, 3.5), route_point(route, s_c + 1.0, 3.5),
                                      route_point(route, s_c, -2.0), route_point(route, s_c, -12.0), 30));
      pts.push_back(route_point(route, s_c, -30.0));
      Actor& a = new_actor(w, ActorKind::Vehicle);
      a.path = std::make_shared<const Polyline>(std::move(pts));
      a.half_extents = {2.35, 1.0};
      a.cruise_speed = 0.7 * v_nominal;
      a.idm_follow = true;
      a.trigger_s = trig;
      place_on_path(a);
      break;
    }
    case ScenarioKind::OpeningDoor: {
      const double s_p = trig + dist;
      require_inside(route, s_p + 30.0, spec);
      Actor& car = new_actor(w, ActorKind::Static);
      car.pose = route_pose(route, s_p, -2.9);
      car.half_extents = {2.3, 0.95};
      car.triggered = true;
      Actor& door = new_actor(w, ActorKind::Static);
      door.pose = route_pose(route, s_p + 0.8, -1.45);
      door.half_extents = {0.15, 0.5};
      door.present = false;
      door.appear_on_trigger = true;
      door.trigger_s = trig;
      break;
    }
  }
  w.scenarios.push_back({spec, dist});
}

WorldState build_scenario(const ScenarioSpec& spec, std::shared_ptr<const Polyline> route,
                          std::uint64_t rng_seed, const WorldConfig& config) {
  WorldState w = make_world(std::move(route), config);
  add_scenario(w, spec, rng_seed);
  return w;
}

namespace {

// IDM leader for a scripted vehicle: the nearest ego or vehicle footprint
// ahead on its own path.
Hazard scripted_leader(const Actor& self, const VehicleState& ego, const std::vector<Actor>& actors) {
  Hazard best;
  best.gap = std::numeric_limits<double>::infinity();
  const Polyline& path = *self.path;
  auto consider = [&](const OrientedBox& box, double speed, int id) {
    if (distance(box.center, self.pose.position()) > 60.0) return;
    const Projection pr = path.project(box.center, self.path_s - 2.0, self.path_s + 50.0);
    if (pr.s <= self.path_s) return;
    const double rel = box.yaw - path.heading_at(pr.s);
    const double lateral_extent = box.half_length * std::abs(std::sin(rel)) + box.half_width * std::abs(std::cos(rel));
    if (std::abs(pr.d) > self.half_extents.y + lateral_extent + 0.3) return;
    const double along_extent = box.half_length * std::abs(std::cos(rel)) + box.half_width * std::abs(std::sin(rel));
    const double gap = pr.s - self.path_s - self.half_extents.x - along_extent;
    if (gap < best.gap) {
      best.kind = HazardKind::LeadingVehicle;
      best.gap = gap;
      best.closing_speed = self.speed - speed * std::cos(rel);
      best.actor_id = id;
    }
  };
  consider(ego.footprint(), ego.speed, 0);
  for (const Actor& o : actors) {
    if (o.id == self.id || !o.present || o.kind != ActorKind::Vehicle) continue;
    consider(o.footprint(), o.speed, o.id);
  }
  if (!best.present()) best.gap = 0.0;
  return best;
}

void advance_actor(Actor& a, const VehicleState& ego, const std::vector<Actor>& before, double dt) {
  if (!a.present) return;
  switch (a.kind) {
    case ActorKind::Static:
      return;
    case ActorKind::Walker: {
      if (!a.triggered || a.phase == ScriptPhase::Finished) return;
      a.phase = ScriptPhase::Cruising;
      a.speed = a.cruise_speed;
      a.path_s += a.speed * dt;
      if (a.path_s >= a.path->length()) {
        a.path_s = a.path->length();
        a.speed = 0.0;
        a.phase = ScriptPhase::Finished;
      }
      place_on_path(a);
      return;
    }
    case ActorKind::Vehicle: {
      if (a.phase == ScriptPhase::Waiting || a.phase == ScriptPhase::Finished) return;
      double accel = 0.0;
      double follow = std::numeric_limits<double>::infinity();
      if (a.idm_follow) {
        IdmParams p;
        p.desired_speed = std::max(a.cruise_speed, 0.1);
        p.min_gap = 3.0;
        follow = idm_acceleration(a.speed, scripted_leader(a, ego, before), p).accel;
      }
      switch (a.phase) {
        case ScriptPhase::Cruising:
          accel = a.idm_follow ? follow : std::clamp((a.cruise_speed - a.speed) / dt, -4.0, 2.0);
          break;
        case ScriptPhase::Braking:
          accel = std::min(-a.brake_decel, follow);
          if (a.speed + accel * dt <= 0.0) {
            a.phase = ScriptPhase::Holding;
            a.hold_timer = 0.0;
          }
          break;
        case ScriptPhase::Holding:
          a.speed = 0.0;
          a.hold_timer += dt;
          if (a.hold_timer >= a.brake_hold) a.phase = ScriptPhase::Cruising;
          return;
        default:
          return;
      }
      a.speed = std::max(0.0, a.speed + accel * dt);
      a.path_s += a.speed * dt;
      if (a.path_s >= a.path->length()) {
        a.path_s = a.path->length();
        a.present = false;
        a.phase = ScriptPhase::Finished;
      }
      place_on_path(a);
      return;
    }
  }
}

void fire_trigger(Actor& a) {
  a.triggered = true;
  if (a.appear_on_trigger) a.present = true;
  if (a.kind == ActorKind::Vehicle) {
    if (a.brake_decel > 0.0 && a.phase == ScriptPhase::Cruising) {
      a.phase = ScriptPhase::Braking;
    } else if (a.phase == ScriptPhase::Waiting) {
      a.phase = ScriptPhase::Cruising;
      a.speed = a.cruise_speed;
    }
  }
}

InfractionKind collision_kind(ActorKind k) {
  switch (k) {
    case ActorKind::Walker: return InfractionKind::CollisionPedestrian;
    case ActorKind::Vehicle: return InfractionKind::CollisionVehicle;
    case ActorKind::Static: return InfractionKind::CollisionStatic;
  }
  return InfractionKind::CollisionStatic;
}

bool intended_stop(const WorldState& w) {
  const double front = w.ego_front_s();
  for (const auto& l : w.map.lights) {
    if (l.phase_at(w.tick) == LightPhase::Red && front <= l.stop_s && front >= l.stop_s - 20.0) return true;
  }
  for (std::size_t i = 0; i < w.map.stop_signs.size(); ++i) {
    const auto& s = w.map.stop_signs[i];
    if (front <= s.stop_s && front >= s.stop_s - s.zone_length - 12.0) return true;
  }
  return false;
}

}  // namespace

std::vector<InfractionEvent> detect_infractions(WorldState& w) {
  std::vector<InfractionEvent> events;
  auto emit = [&](InfractionKind k, int actor) { events.push_back({k, w.tick, w.ego_route_s, actor}); };
  InfractionMonitor& m = w.monitor;

  const OrientedBox ego_box = w.ego.footprint();
  for (const Actor& a : w.actors) {
    auto it = std::find(m.contacts.begin(), m.contacts.end(), a.id);
    const bool touching = a.present && overlaps(ego_box, a.footprint());
    if (touching && it == m.contacts.end()) {
      m.contacts.push_back(a.id);
      emit(collision_kind(a.kind), a.id);
    } else if (!touching && it != m.contacts.end()) {
      m.contacts.erase(it);
    }
  }

  const double front = w.ego_front_s();
  for (const auto& light : w.map.lights) {
    if (m.prev_front_s < light.stop_s && front >= light.stop_s && light.phase_at(w.tick) == LightPhase::Red)
      emit(InfractionKind::RedLight, -1);
  }

  if (m.stop_satisfied.size() < w.map.stop_signs.size() || m.stop_dwell.size() < w.map.stop_signs.size()) {
    m.stop_satisfied.resize(w.map.stop_signs.size(), false);
    m.stop_resolved.resize(w.map.stop_signs.size(), false);
    m.stop_dwell.resize(w.map.stop_signs.size(), 0.0);
  }
  for (std::size_t i = 0; i < w.map.stop_signs.size(); ++i) {
    if (m.stop_resolved[i]) continue;
    const StopSign& sign = w.map.stop_signs[i];
    if (front >= sign.stop_s - sign.zone_length && front <= sign.stop_s && w.ego.speed < w.config.stop_speed) {
      m.stop_satisfied[i] = true;
      m.stop_dwell[i] += w.sim_dt;
    }
    if (front > sign.stop_s) {
      m.stop_resolved[i] = true;
      if (!m.stop_satisfied[i]) emit(InfractionKind::StopSign, -1);
    }
  }

  if (!m.terminated && std::abs(w.ego_route_d) > w.config.deviation_limit) {
    emit(InfractionKind::RouteDeviation, -1);
    m.terminated = true;
  }

  if (w.ego.speed < w.config.stop_speed && !intended_stop(w)) {
    m.blocked_time += w.sim_dt;
  } else {
    m.blocked_time = 0.0;
  }
  if (!m.terminated && m.blocked_time > w.config.blocked_timeout) {
    emit(InfractionKind::AgentBlocked, -1);
    m.terminated = true;
  }

  m.prev_front_s = front;
  return events;
}

std::vector<InfractionEvent> advance_world(WorldState& w, double ego_accel, double ego_steer) {
  for (Actor& a : w.actors) {
    if (!a.triggered && (a.trigger_s < 0.0 || w.ego_route_s >= a.trigger_s)) fire_trigger(a);
  }

  const std::vector<Actor> before = w.actors;
  for (Actor& a : w.actors) advance_actor(a, w.ego, before, w.sim_dt);

  const Vec2 old_pos = w.ego.pose.position();
  w.ego = step_vehicle(w.ego, ego_accel, ego_steer, w.sim_dt, w.config.max_steer);
  w.odometer += distance(old_pos, w.ego.pose.position());
  ++w.tick;

  const double reach = 5.0 + 2.0 * w.ego.speed * w.sim_dt;
  const Projection pr = w.route().project(w.ego.pose.position(), w.ego_route_s - reach, w.ego_route_s + reach);
  w.ego_route_s = pr.s;
  w.ego_route_d = pr.d;
  return detect_infractions(w);
}

StepResult step_world(WorldState world, double ego_accel, double ego_steer) {
  auto events = advance_world(world, ego_accel, ego_steer);
  return {std::move(world), std::move(events)};
}

}  // namespace drivebench
