#include "drivebench/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "drivebench/error.hpp"

#ifndef DRIVEBENCH_SCENARIO_DIR
#define DRIVEBENCH_SCENARIO_DIR "scenarios"
#endif

namespace drivebench {

using nlohmann::json;

namespace {

json gains_json(const PidGains& g) {
  return {{"kp", g.kp}, {"ki", g.ki}, {"kd", g.kd}, {"integral_limit", g.integral_limit}};
}

PidGains gains_from(const json& j) {
  return {j.at("kp").get<double>(), j.at("ki").get<double>(), j.at("kd").get<double>(),
          j.at("integral_limit").get<double>()};
}

json to_doc(const HarnessConfig& c) {
  const WorldConfig& w = c.world;
  const ExpertConfig& e = c.expert;
  const ControllerConfig& k = c.controller;
  json weights = json::object();
  for (const auto& [b, v] : c.bucket_weights) weights[std::string(to_string(b))] = v;
  json penalties = json::object();
  for (const auto& [kind, v] : c.penalties.coefficients) penalties[std::string(to_string(kind))] = v;
  return {
      {"catalog", c.catalog},
      {"scenario_dir", c.scenario_dir},
      {"seed", c.seed},
      {"speed_limit", c.speed_limit},
      {"max_episode_time", c.max_episode_time},
      {"world",
       {{"sim_dt", w.sim_dt},
        {"record_every", w.record_every},
        {"stop_speed", w.stop_speed},
        {"deviation_limit", w.deviation_limit},
        {"blocked_timeout", w.blocked_timeout},
        {"max_steer", w.max_steer},
        {"wheelbase", w.wheelbase},
        {"length", w.length},
        {"width", w.width}}},
      {"expert",
       {{"idm",
         {{"desired_speed", e.idm.desired_speed},
          {"time_headway", e.idm.time_headway},
          {"min_gap", e.idm.min_gap},
          {"max_accel", e.idm.max_accel},
          {"comfort_decel", e.idm.comfort_decel},
          {"exponent", e.idm.exponent},
          {"emergency_decel", e.idm.emergency_decel}}},
        {"path_points", e.path_points},
        {"path_spacing", e.path_spacing},
        {"waypoints", e.waypoints},
        {"waypoint_dt", e.waypoint_dt},
        {"waypoint_mode", e.waypoint_mode == WaypointMode::Rollout ? "rollout" : "recorded"},
        {"corridor_margin", e.corridor_margin},
        {"lookahead_min", e.lookahead_min},
        {"lookahead_time", e.lookahead_time},
        {"prediction_horizon", e.prediction_horizon},
        {"prediction_step", e.prediction_step},
        {"clearance_margin", e.clearance_margin},
        {"max_offset", e.max_offset},
        {"ramp_min", e.ramp_min},
        {"ramp_per_offset", e.ramp_per_offset},
        {"hold_buffer", e.hold_buffer},
        {"lateral_accel", e.lateral_accel},
        {"curve_decel", e.curve_decel},
        {"pursuit_gain", e.pursuit_gain},
        {"pursuit_min", e.pursuit_min},
        {"pursuit_max", e.pursuit_max},
        {"stop_dwell", e.stop_dwell},
        {"target_spacing", e.target_spacing}}},
      {"controller",
       {{"lateral", gains_json(k.lateral)},
        {"longitudinal", gains_json(k.longitudinal)},
        {"lookahead_gain", k.lookahead_gain},
        {"lookahead_min", k.lookahead_min},
        {"lookahead_max", k.lookahead_max},
        {"speed_segments", k.speed_segments},
        {"stop_speed", k.stop_speed},
        {"max_accel", k.max_accel},
        {"max_decel", k.max_decel},
        {"collapsed_waypoint", k.collapsed_waypoint}}},
      {"buckets",
       {{"accel_low", c.buckets.accel_low},
        {"accel_high", c.buckets.accel_high},
        {"steer", c.buckets.steer},
        {"start_speed", c.buckets.start_speed},
        {"start_accel", c.buckets.start_accel},
        {"weights", weights},
        {"epoch_fraction", c.epoch_fraction}}},
      {"penalties", penalties},
      {"early_stop", {{"threshold", c.early_stop.threshold}, {"steer_epsilon", c.early_stop.steer_epsilon}}},
      {"output", {{"data", c.output.data}, {"results", c.output.results}, {"report", c.output.report}}},
  };
}

bool same_type(const json& a, const json& b) {
  if (a.is_number() && b.is_number()) {
    // Integers are accepted where reals are expected, not the reverse.
    return !(a.is_number_integer() && b.is_number_float());
  }
  return a.type() == b.type();
}

// Overlays `user` on `base`, rejecting keys or types the schema lacks.
void merge_checked(json& base, const json& user, const std::string& where) {
  if (!user.is_object()) throw InvalidConfig(where + ": expected an object");
  for (const auto& [key, value] : user.items()) {
    const std::string path = where.empty() ? key : where + "." + key;
    if (!base.contains(key)) throw InvalidConfig("unknown configuration key '" + path + "'");
    json& slot = base[key];
    if (slot.is_object()) {
      merge_checked(slot, value, path);
    } else {
      if (!same_type(slot, value)) throw InvalidConfig("configuration key '" + path + "' has the wrong type");
      slot = value;
    }
  }
}

HarnessConfig from_doc(const json& d) {
  HarnessConfig c;
  c.catalog = d.at("catalog").get<std::string>();
  c.scenario_dir = d.at("scenario_dir").get<std::string>();
  c.seed = d.at("seed").get<std::uint64_t>();
  c.speed_limit = d.at("speed_limit").get<double>();
  c.max_episode_time = d.at("max_episode_time").get<double>();

  const json& w = d.at("world");
  c.world.sim_dt = w.at("sim_dt").get<double>();
  c.world.record_every = w.at("record_every").get<int>();
  c.world.stop_speed = w.at("stop_speed").get<double>();
  c.world.deviation_limit = w.at("deviation_limit").get<double>();
  c.world.blocked_timeout = w.at("blocked_timeout").get<double>();
  c.world.max_steer = w.at("max_steer").get<double>();
  c.world.wheelbase = w.at("wheelbase").get<double>();
  c.world.length = w.at("length").get<double>();
  c.world.width = w.at("width").get<double>();

  const json& e = d.at("expert");
  const json& idm = e.at("idm");
  c.expert.idm.desired_speed = idm.at("desired_speed").get<double>();
  c.expert.idm.time_headway = idm.at("time_headway").get<double>();
  c.expert.idm.min_gap = idm.at("min_gap").get<double>();
  c.expert.idm.max_accel = idm.at("max_accel").get<double>();
  c.expert.idm.comfort_decel = idm.at("comfort_decel").get<double>();
  c.expert.idm.exponent = idm.at("exponent").get<double>();
  c.expert.idm.emergency_decel = idm.at("emergency_decel").get<double>();
  c.expert.path_points = e.at("path_points").get<int>();
  c.expert.path_spacing = e.at("path_spacing").get<double>();
  c.expert.waypoints = e.at("waypoints").get<int>();
  c.expert.waypoint_dt = e.at("waypoint_dt").get<double>();
  const std::string mode = e.at("waypoint_mode").get<std::string>();
  if (mode == "rollout") {
    c.expert.waypoint_mode = WaypointMode::Rollout;
  } else if (mode == "recorded") {
    c.expert.waypoint_mode = WaypointMode::RecordedFuture;
  } else {
    throw InvalidConfig("expert.waypoint_mode must be 'rollout' or 'recorded'");
  }
  c.expert.corridor_margin = e.at("corridor_margin").get<double>();
  c.expert.lookahead_min = e.at("lookahead_min").get<double>();
  c.expert.lookahead_time = e.at("lookahead_time").get<double>();
  c.expert.prediction_horizon = e.at("prediction_horizon").get<double>();
  c.expert.prediction_step = e.at("prediction_step").get<double>();
  c.expert.clearance_margin = e.at("clearance_margin").get<double>();
  c.expert.max_offset = e.at("max_offset").get<double>();
  c.expert.ramp_min = e.at("ramp_min").get<double>();
  c.expert.ramp_per_offset = e.at("ramp_per_offset").get<double>();
  c.expert.hold_buffer = e.at("hold_buffer").get<double>();
  c.expert.lateral_accel = e.at("lateral_accel").get<double>();
  c.expert.curve_decel = e.at("curve_decel").get<double>();
  c.expert.pursuit_gain = e.at("pursuit_gain").get<double>();
  c.expert.pursuit_min = e.at("pursuit_min").get<double>();
  c.expert.pursuit_max = e.at("pursuit_max").get<double>();
  c.expert.target_spacing = e.at("target_spacing").get<double>();
  c.expert.stop_dwell = e.at("stop_dwell").get<double>();

  const json& k = d.at("controller");
  c.controller.lateral = gains_from(k.at("lateral"));
  c.controller.longitudinal = gains_from(k.at("longitudinal"));
  c.controller.lookahead_gain = k.at("lookahead_gain").get<double>();
  c.controller.lookahead_min = k.at("lookahead_min").get<double>();
  c.controller.lookahead_max = k.at("lookahead_max").get<double>();
  c.controller.speed_segments = k.at("speed_segments").get<int>();
  c.controller.stop_speed = k.at("stop_speed").get<double>();
  c.controller.max_accel = k.at("max_accel").get<double>();
  c.controller.max_decel = k.at("max_decel").get<double>();
  c.controller.collapsed_waypoint = k.at("collapsed_waypoint").get<double>();

  const json& b = d.at("buckets");
  c.buckets.accel_low = b.at("accel_low").get<double>();
  c.buckets.accel_high = b.at("accel_high").get<double>();
  c.buckets.steer = b.at("steer").get<double>();
  c.buckets.start_speed = b.at("start_speed").get<double>();
  c.buckets.start_accel = b.at("start_accel").get<double>();
  c.bucket_weights.clear();
  for (const auto& [name, v] : b.at("weights").items()) c.bucket_weights[bucket_from_string(name)] = v.get<double>();
  c.epoch_fraction = b.at("epoch_fraction").get<double>();

  c.penalties.coefficients.clear();
  for (const auto& [name, v] : d.at("penalties").items())
    c.penalties.coefficients[infraction_kind_from_string(name)] = v.get<double>();

  c.early_stop.threshold = d.at("early_stop").at("threshold").get<double>();
  c.early_stop.steer_epsilon = d.at("early_stop").at("steer_epsilon").get<double>();
  c.output.data = d.at("output").at("data").get<std::string>();
  c.output.results = d.at("output").at("results").get<std::string>();
  c.output.report = d.at("output").at("report").get<std::string>();
  return c;
}

}  // namespace

void HarnessConfig::validate() const {
  world.validate();
  expert.validate();
  controller.validate();
  penalties.validate();
  if (!(speed_limit > 0.0)) throw InvalidConfig("speed_limit must be positive");
  if (max_episode_time < 0.0) throw InvalidConfig("max_episode_time must be non-negative");
  if (!(epoch_fraction > 0.0 && epoch_fraction <= 1.0)) throw InvalidConfig("epoch_fraction must lie in (0, 1]");
  for (const auto& [b, w] : bucket_weights) {
    if (!(w >= 0.0)) throw InvalidConfig("bucket weights must be non-negative");
  }
  if (early_stop.threshold < 0.0 || !(early_stop.steer_epsilon > 0.0))
    throw InvalidConfig("early_stop needs threshold >= 0 and steer_epsilon > 0");
  if (std::abs(controller.dt - world.sim_dt) > 1e-12)
    throw InvalidConfig("controller period must equal the simulation tick");
  if (std::abs(controller.waypoint_dt - expert.waypoint_dt) > 1e-12)
    throw InvalidConfig("controller and expert must agree on the waypoint spacing in time");
  const double per = expert.waypoint_dt / world.sim_dt;
  if (std::abs(per - std::round(per)) > 1e-9) throw InvalidConfig("waypoint_dt must be a multiple of sim_dt");
}

std::filesystem::path HarnessConfig::scenario_path() const {
  return scenario_dir.empty() ? std::filesystem::path(DRIVEBENCH_SCENARIO_DIR) : std::filesystem::path(scenario_dir);
}

std::string config_to_json(const HarnessConfig& config, int indent) { return to_doc(config).dump(indent); }

HarnessConfig config_from_json(const std::string& text) {
  json user;
  try {
    user = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidConfig(std::string("configuration is not valid JSON: ") + e.what());
  }
  json doc = to_doc(HarnessConfig{});
  merge_checked(doc, user, "");
  HarnessConfig c;
  try {
    c = from_doc(doc);
  } catch (const json::exception& e) {
    throw InvalidConfig(std::string("malformed configuration: ") + e.what());
  }
  c.controller.dt = c.world.sim_dt;
  c.controller.waypoint_dt = c.expert.waypoint_dt;
  c.controller.max_steer = c.world.max_steer;
  c.validate();
  return c;
}

HarnessConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open configuration " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

HarnessConfig resolve_config(const std::string& path) {
  if (!path.empty()) return load_config(path);
  if (const char* env = std::getenv(kConfigEnvVar); env && *env) return load_config(env);
  return HarnessConfig{};
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string config_digest(const HarnessConfig& config) {
  json doc = to_doc(config);
  doc.erase("output");
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(doc.dump())));
  return buf;
}

}  // namespace drivebench
