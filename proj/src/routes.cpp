#include "drivebench/routes.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "drivebench/error.hpp"
#include "drivebench/random.hpp"

namespace drivebench {

using nlohmann::json;

std::string_view to_string(RouteGeometry g) {
  switch (g) {
    case RouteGeometry::Straight: return "straight";
    case RouteGeometry::Turns: return "turns";
    case RouteGeometry::Scenario: return "scenario";
    case RouteGeometry::StopTurn: return "stop_turn";
  }
  return "scenario";
}

RouteGeometry route_geometry_from_string(std::string_view s) {
  for (auto g : {RouteGeometry::Straight, RouteGeometry::Turns, RouteGeometry::Scenario, RouteGeometry::StopTurn}) {
    if (to_string(g) == s) return g;
  }
  throw ParseError("unknown route geometry '" + std::string(s) + "'");
}

namespace {

constexpr double kStep = 0.5;  // centreline sampling, m

// Turtle-style centreline builder.
class RouteBuilder {
 public:
  RouteBuilder() { pts_.push_back({0.0, 0.0}); }

  void straight(double len) {
    const int n = std::max(1, static_cast<int>(std::ceil(len / kStep)));
    const Vec2 start = pts_.back();
    const Vec2 dir = heading_vector(yaw_);
    for (int i = 1; i <= n; ++i) pts_.push_back(start + dir * (len * i / n));
    length_ += len;
  }

  /// Arc of `radius`; positive angle turns left.
  void arc(double radius, double angle) {
    const double len = radius * std::abs(angle);
    const int n = std::max(2, static_cast<int>(std::ceil(len / kStep)));
    const double sign = angle > 0 ? 1.0 : -1.0;
    const Vec2 start = pts_.back();
    const Vec2 center = start + heading_vector(yaw_ + sign * kPi / 2.0) * radius;
    const double phi0 = yaw_ - sign * kPi / 2.0;
    for (int i = 1; i <= n; ++i) {
      const double phi = phi0 + angle * i / n;
      pts_.push_back(center + heading_vector(phi) * radius);
    }
    yaw_ += angle;
    length_ += len;
  }

  double length() const { return length_; }
  Polyline finish(double max_length) const {
    Polyline full(pts_);
    return max_length < full.length() ? full.slice(0.0, max_length) : full;
  }

 private:
  std::vector<Vec2> pts_;
  double yaw_ = 0.0;
  double length_ = 0.0;
};

struct StopTurnLayout {
  double stop_s = 8.0;
  double turn_start = 10.0;
  double radius = 8.0;
  double side = 1.0;  // +1 left turn
  double exit_length = 40.0;
  double turn_end() const { return turn_start + radius * kPi / 2.0; }
};

StopTurnLayout stop_turn_layout(std::uint64_t seed) {
  auto rng = make_rng(seed, 0x5707);
  StopTurnLayout l;
  l.radius = uniform(rng, 7.0, 10.0);
  l.side = uniform01(rng) < 0.5 ? 1.0 : -1.0;
  return l;
}

ScenarioSpec parse_spec(const json& j, std::uint64_t default_seed) {
  ScenarioSpec s;
  s.kind = scenario_kind_from_string(j.at("kind").get<std::string>());
  s.trigger_distance = j.at("trigger_distance").get<double>();
  s.distance_param = j.at("distance_param").get<double>();
  s.seed = j.contains("seed") ? j.at("seed").get<std::uint64_t>() : default_seed;
  return s;
}

}  // namespace

ScenarioCatalog parse_catalog(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("catalog is not valid JSON: ") + e.what());
  }
  ScenarioCatalog cat;
  try {
    cat.format_version = doc.value("format_version", 1);
    if (cat.format_version != 1)
      throw ParseError("unsupported catalog format_version " + std::to_string(cat.format_version));
    for (const auto& r : doc.at("routes")) {
      CatalogEntry e;
      e.name = r.at("name").get<std::string>();
      e.geometry = route_geometry_from_string(r.value("geometry", std::string("scenario")));
      e.length = r.value("length", 300.0);
      e.count = r.value("count", 1);
      e.seed = r.value("seed", std::uint64_t{0});
      if (e.count < 1) throw InvalidSpec("route entry '" + e.name + "' needs count >= 1");
      if (!(e.length > 0.0)) throw InvalidSpec("route entry '" + e.name + "' needs a positive length");
      if (r.contains("scenarios")) {
        for (const auto& s : r.at("scenarios")) e.scenarios.push_back(parse_spec(s, 0));
      }
      std::sort(e.scenarios.begin(), e.scenarios.end(),
                [](const ScenarioSpec& a, const ScenarioSpec& b) { return a.trigger_distance < b.trigger_distance; });
      cat.entries.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed catalog: ") + e.what());
  }
  return cat;
}

ScenarioCatalog load_catalog(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open catalog " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_catalog(ss.str());
}

std::filesystem::path resolve_catalog_path(const std::string& name_or_path, const std::filesystem::path& dir) {
  std::filesystem::path p(name_or_path);
  if (std::filesystem::is_regular_file(p)) return p;
  std::filesystem::path named = dir / (name_or_path + ".json");
  if (std::filesystem::is_regular_file(named)) return named;
  throw IoError("no route catalog named '" + name_or_path + "' (looked in " + dir.string() + ")");
}

Polyline generate_route(RouteGeometry geometry, double length, std::uint64_t seed,
                        const std::vector<ScenarioSpec>& scenarios) {
  if (!(length > 0.0)) throw InvalidSpec("route length must be positive");
  auto rng = make_rng(seed, 0x0107e);
  RouteBuilder b;
  switch (geometry) {
    case RouteGeometry::Straight:
      b.straight(length);
      break;
    case RouteGeometry::Turns: {
      b.straight(30.0);
      while (b.length() < length) {
        const double angle = deg2rad(uniform(rng, 45.0, 90.0)) * (uniform01(rng) < 0.5 ? 1.0 : -1.0);
        b.arc(uniform(rng, 15.0, 35.0), angle);
        b.straight(uniform(rng, 25.0, 50.0));
      }
      break;
    }
    case RouteGeometry::Scenario: {
      double clear = 40.0;
      for (const auto& s : scenarios) clear = std::max(clear, s.trigger_distance + 1.1 * s.distance_param + 60.0);
      const double radius = uniform(rng, 40.0, 80.0);
      const double angle = deg2rad(uniform(rng, 20.0, 45.0)) * (uniform01(rng) < 0.5 ? 1.0 : -1.0);
      if (clear + radius * std::abs(angle) + 10.0 < length) {
        b.straight(clear);
        b.arc(radius, angle);
        b.straight(length - b.length());
      } else {
        b.straight(length);
      }
      break;
    }
    case RouteGeometry::StopTurn: {
      const StopTurnLayout l = stop_turn_layout(seed);
      b.straight(l.turn_start);
      b.arc(l.radius, l.side * kPi / 2.0);
      b.straight(l.exit_length);
      return b.finish(b.length());
    }
  }
  return b.finish(length);
}

std::vector<RouteInstance> expand_catalog(const ScenarioCatalog& catalog) {
  std::vector<RouteInstance> out;
  for (const auto& e : catalog.entries) {
    for (int i = 0; i < e.count; ++i) {
      RouteInstance r;
      char suffix[16];
      std::snprintf(suffix, sizeof suffix, "_%02d", i);
      r.route_id = e.name + suffix;
      r.family = e.name;
      r.geometry = e.geometry;
      r.seed = e.seed + static_cast<std::uint64_t>(i);
      r.scenarios = e.scenarios;
      for (auto& s : r.scenarios) s.seed = s.seed + r.seed;
      r.route = std::make_shared<const Polyline>(generate_route(e.geometry, e.length, r.seed, r.scenarios));
      out.push_back(std::move(r));
    }
  }
  return out;
}

WorldState build_route_world(const RouteInstance& instance, const WorldConfig& config, double speed_limit) {
  WorldState w = make_world(instance.route, config);
  w.map.speed_limit = speed_limit;
  for (const auto& spec : instance.scenarios) add_scenario(w, spec, instance.seed);

  if (instance.geometry == RouteGeometry::StopTurn) {
    const StopTurnLayout l = stop_turn_layout(instance.seed);
    const Polyline& route = *instance.route;
    // Red for the first two seconds so the ego starts out halted.
    w.map.lights.push_back({l.stop_s, static_cast<int>(std::lround(2.0 / w.sim_dt))});
    IntersectionZone zone;
    zone.s_begin = l.stop_s;
    zone.s_end = l.turn_end() + 5.0;
    std::vector<Vec2> left, right;
    for (double s = zone.s_begin; s <= zone.s_end + 1e-9; s += 1.0) {
      left.push_back(route_point(route, s, 6.0));
      right.push_back(route_point(route, s, -6.0));
    }
    zone.polygon.vertices = left;
    zone.polygon.vertices.insert(zone.polygon.vertices.end(), right.rbegin(), right.rend());
    w.map.intersections.push_back(std::move(zone));
    // Curb blocks along the outside of the turn and the exit lane.
    const double outer = -l.side;
    for (double s = l.turn_start - 1.0; s <= l.turn_end() + 12.0; s += 1.0) {
      Actor a;
      a.id = static_cast<int>(w.actors.size()) + 1;
      a.kind = ActorKind::Static;
      a.pose = Pose2D(route_point(route, s, outer * 2.85), route.heading_at(s));
      a.half_extents = {0.5, 0.25};
      a.triggered = true;
      w.actors.push_back(a);
    }
  }
  return w;
}

std::vector<double> target_point_stations(double start, double end, double spacing) {
  std::vector<double> out;
  for (double s = start + spacing; s < end - 1e-9; s += spacing) out.push_back(s);
  out.push_back(end);
  return out;
}

}  // namespace drivebench
