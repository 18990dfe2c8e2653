#include "drivebench/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "drivebench/error.hpp"
#include "drivebench/random.hpp"
#include "drivebench/routes.hpp"

namespace drivebench {

using nlohmann::json;

HazardFlags HazardFlags::from(const Hazard& h) {
  HazardFlags f;
  switch (h.kind) {
    case HazardKind::LeadingVehicle:
      f.vehicle_front = h.source == Direction::Front;
      f.vehicle_left = h.source == Direction::Left;
      f.vehicle_right = h.source == Direction::Right;
      f.vehicle_oncoming = h.source == Direction::Oncoming;
      break;
    case HazardKind::Walker: f.walker = true; break;
    case HazardKind::RedLight: f.red_light = true; break;
    case HazardKind::StopSign: f.stop_sign = true; break;
    case HazardKind::None: break;
  }
  return f;
}

std::string SampleRecord::sample_id() const { return route_id + ":" + std::to_string(tick); }

void label_accelerations(std::vector<SampleRecord>& records, double record_dt, double start_speed,
                         double start_accel) {
  const std::size_t n = records.size();
  for (std::size_t i = 0; i < n; ++i) {
    double a = 0.0;
    if (n >= 2) {
      const std::size_t lo = i == 0 ? 0 : i - 1;
      const std::size_t hi = i + 1 == n ? n - 1 : i + 1;
      a = (records[hi].speed - records[lo].speed) / (static_cast<double>(hi - lo) * record_dt);
    }
    records[i].accel = a;
    records[i].starting_from_stop = records[i].speed < start_speed && a > start_accel;
  }
}

// ---------------------------------------------------------------- episode IO

namespace {

json vec_json(const Vec2& p) { return json::array({p.x, p.y}); }

Vec2 vec_from(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

json points_json(const std::vector<Vec2>& pts) {
  json a = json::array();
  for (const auto& p : pts) a.push_back(vec_json(p));
  return a;
}

std::vector<Vec2> points_from(const json& j) {
  std::vector<Vec2> out;
  for (const auto& p : j) out.push_back(vec_from(p));
  return out;
}

json record_json(const SampleRecord& r) {
  const Hazard& h = r.labels.hazard;
  const HazardFlags& f = r.hazards;
  return json{
      {"route_id", r.route_id},
      {"scenario", r.scenario_kind},
      {"tick", r.tick},
      {"sim_time", r.sim_time},
      {"pose", json::array({r.pose.x, r.pose.y, r.pose.yaw})},
      {"speed", r.speed},
      {"accel", r.accel},
      {"steer", r.steer},
      {"path", points_json(r.labels.path)},
      {"waypoints", points_json(r.labels.waypoints)},
      {"target_points", json::array({vec_json(r.labels.target_points[0]), vec_json(r.labels.target_points[1])})},
      {"commentary", r.labels.commentary},
      {"hazard",
       {{"kind", to_string(h.kind)},
        {"gap", h.gap},
        {"closing_speed", h.closing_speed},
        {"source", to_string(h.source)},
        {"actor_id", h.actor_id}}},
      {"flags",
       {{"vehicle_front", f.vehicle_front},
        {"vehicle_left", f.vehicle_left},
        {"vehicle_right", f.vehicle_right},
        {"vehicle_oncoming", f.vehicle_oncoming},
        {"walker", f.walker},
        {"red_light", f.red_light},
        {"stop_sign", f.stop_sign}}},
      {"swerving", r.swerving},
      {"starting_from_stop", r.starting_from_stop},
  };
}

SampleRecord record_from(const json& j) {
  SampleRecord r;
  r.route_id = j.at("route_id").get<std::string>();
  r.scenario_kind = j.at("scenario").get<std::string>();
  r.tick = j.at("tick").get<int>();
  r.sim_time = j.at("sim_time").get<double>();
  const json& pose = j.at("pose");
  r.pose.x = pose.at(0).get<double>();
  r.pose.y = pose.at(1).get<double>();
  r.pose.yaw = pose.at(2).get<double>();
  r.speed = j.at("speed").get<double>();
  r.accel = j.at("accel").get<double>();
  r.steer = j.at("steer").get<double>();
  r.labels.path = points_from(j.at("path"));
  r.labels.waypoints = points_from(j.at("waypoints"));
  r.labels.target_points = {vec_from(j.at("target_points").at(0)), vec_from(j.at("target_points").at(1))};
  r.labels.commentary = j.at("commentary").get<std::string>();
  const json& h = j.at("hazard");
  r.labels.hazard.kind = hazard_kind_from_string(h.at("kind").get<std::string>());
  r.labels.hazard.gap = h.at("gap").get<double>();
  r.labels.hazard.closing_speed = h.at("closing_speed").get<double>();
  r.labels.hazard.source = direction_from_string(h.at("source").get<std::string>());
  r.labels.hazard.actor_id = h.at("actor_id").get<int>();
  const json& f = j.at("flags");
  r.hazards.vehicle_front = f.at("vehicle_front").get<bool>();
  r.hazards.vehicle_left = f.at("vehicle_left").get<bool>();
  r.hazards.vehicle_right = f.at("vehicle_right").get<bool>();
  r.hazards.vehicle_oncoming = f.at("vehicle_oncoming").get<bool>();
  r.hazards.walker = f.at("walker").get<bool>();
  r.hazards.red_light = f.at("red_light").get<bool>();
  r.hazards.stop_sign = f.at("stop_sign").get<bool>();
  r.swerving = j.at("swerving").get<bool>();
  r.labels.swerving = r.swerving;
  r.starting_from_stop = j.at("starting_from_stop").get<bool>();
  return r;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << text;
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move " + tmp.string() + " into place: " + ec.message());
}

}  // namespace

std::string episode_to_jsonl(const Episode& e) {
  std::string out;
  const json header{{"type", "episode_header"},
                    {"format_version", e.header.format_version},
                    {"route_id", e.header.route_id},
                    {"scenario", e.header.scenario},
                    {"seed", e.header.seed},
                    {"config_digest", e.header.config_digest},
                    {"weather", e.header.weather}};
  out += header.dump();
  out += '\n';
  for (const auto& r : e.records) {
    out += record_json(r).dump();
    out += '\n';
  }
  return out;
}

Episode episode_from_jsonl(const std::string& text) {
  Episode e;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool have_header = false;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    const bool terminated = end != std::string::npos;
    if (!terminated) end = text.size();
    const std::string line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.empty()) {
      if (terminated) continue;
      break;
    }
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& ex) {
      throw ParseError(std::string("malformed episode record: ") + ex.what(), line_no);
    }
    try {
      if (!have_header) {
        if (j.value("type", std::string()) != "episode_header")
          throw ParseError("first line must be the episode header", line_no);
        e.header.format_version = j.at("format_version").get<int>();
        if (e.header.format_version != kEpisodeFormatVersion)
          throw ParseError("unsupported episode format_version " + std::to_string(e.header.format_version), line_no);
        e.header.route_id = j.at("route_id").get<std::string>();
        e.header.scenario = j.at("scenario").get<std::string>();
        e.header.seed = j.at("seed").get<std::uint64_t>();
        e.header.config_digest = j.at("config_digest").get<std::string>();
        e.header.weather = j.value("weather", std::string("clear"));
        have_header = true;
      } else {
        e.records.push_back(record_from(j));
      }
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception& ex) {
      throw ParseError(std::string("invalid episode record: ") + ex.what(), line_no);
    }
  }
  if (!have_header) throw ParseError("episode file is empty", 1);
  return e;
}

void write_episode(const std::filesystem::path& path, const Episode& episode) {
  write_text_atomic(path, episode_to_jsonl(episode));
}

Episode read_episode(const std::filesystem::path& path) {
  try {
    return episode_from_jsonl(read_text(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

// ------------------------------------------------------------------ buckets

std::string_view to_string(Bucket b) {
  switch (b) {
    case Bucket::Accel1To2: return "accel_1_2";
    case Bucket::AccelAbove2: return "accel_ge_2";
    case Bucket::Decel1To2: return "decel_1_2";
    case Bucket::DecelBelow2: return "decel_le_2";
    case Bucket::StartingFromStop: return "starting_from_stop";
    case Bucket::SteerLeft: return "steer_left";
    case Bucket::SteerRight: return "steer_right";
    case Bucket::VehicleLeft: return "vehicle_left";
    case Bucket::VehicleRight: return "vehicle_right";
    case Bucket::VehicleOncoming: return "vehicle_oncoming";
    case Bucket::StopSign: return "stop_sign";
    case Bucket::RedLight: return "red_light";
    case Bucket::Walker: return "walker";
    case Bucket::Swerve: return "swerve";
    case Bucket::All: return "all";
  }
  return "all";
}

Bucket bucket_from_string(std::string_view s) {
  for (Bucket b : kAllBuckets) {
    if (to_string(b) == s) return b;
  }
  throw ParseError("unknown bucket '" + std::string(s) + "'");
}

std::vector<Bucket> classify_buckets(const SampleRecord& s, const BucketThresholds& cfg) {
  std::vector<Bucket> out;
  const double a = s.accel;
  if (a >= cfg.accel_low && a < cfg.accel_high) out.push_back(Bucket::Accel1To2);
  if (a >= cfg.accel_high) out.push_back(Bucket::AccelAbove2);
  if (a <= -cfg.accel_low && a > -cfg.accel_high) out.push_back(Bucket::Decel1To2);
  if (a <= -cfg.accel_high) out.push_back(Bucket::DecelBelow2);
  if (s.speed < cfg.start_speed && a > cfg.start_accel) out.push_back(Bucket::StartingFromStop);
  if (s.steer > cfg.steer) out.push_back(Bucket::SteerLeft);
  if (s.steer < -cfg.steer) out.push_back(Bucket::SteerRight);
  if (s.hazards.vehicle_left) out.push_back(Bucket::VehicleLeft);
  if (s.hazards.vehicle_right) out.push_back(Bucket::VehicleRight);
  if (s.hazards.vehicle_oncoming) out.push_back(Bucket::VehicleOncoming);
  if (s.hazards.stop_sign) out.push_back(Bucket::StopSign);
  if (s.hazards.red_light) out.push_back(Bucket::RedLight);
  if (s.hazards.walker) out.push_back(Bucket::Walker);
  if (s.swerving) out.push_back(Bucket::Swerve);
  out.push_back(Bucket::All);
  return out;
}

BucketWeights default_bucket_weights() {
  BucketWeights w;
  for (Bucket b : kAllBuckets) w[b] = 1.0;
  // all / (14 + all) = 0.1
  w[Bucket::All] = 14.0 / 9.0;
  return w;
}

BucketIndex empty_index() {
  BucketIndex idx;
  for (Bucket b : kAllBuckets) idx[b];
  return idx;
}

void add_to_index(BucketIndex& index, const std::vector<SampleRecord>& records, const BucketThresholds& cfg) {
  for (Bucket b : kAllBuckets) index[b];
  for (const auto& r : records) {
    const std::string id = r.sample_id();
    for (Bucket b : classify_buckets(r, cfg)) index[b].push_back(id);
  }
}

std::vector<std::string> sample_epoch(const BucketIndex& index, const BucketWeights& weights, std::size_t epoch_size,
                                      std::uint64_t seed) {
  if (epoch_size == 0) throw InvalidInput("epoch size must be positive");
  std::vector<const std::vector<std::string>*> pools;
  std::vector<double> cumulative;
  double total = 0.0;
  for (const auto& [bucket, weight] : weights) {
    if (!(weight >= 0.0) || !std::isfinite(weight))
      throw InvalidConfig("bucket weight for " + std::string(to_string(bucket)) + " must be a non-negative number");
    const auto it = index.find(bucket);
    if (weight == 0.0 || it == index.end() || it->second.empty()) continue;
    total += weight;
    pools.push_back(&it->second);
    cumulative.push_back(total);
  }
  if (pools.empty()) throw EmptyDataset("every weighted bucket is empty");

  auto rng = make_rng(seed, 0xE9);
  std::vector<std::string> out;
  out.reserve(epoch_size);
  for (std::size_t i = 0; i < epoch_size; ++i) {
    const double u = uniform01(rng) * total;
    std::size_t k = static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), u) -
                                             cumulative.begin());
    k = std::min(k, pools.size() - 1);
    const auto& pool = *pools[k];
    out.push_back(pool[uniform_index(rng, pool.size())]);
  }
  return out;
}

std::size_t epoch_size_for(std::size_t dataset_size, double fraction) {
  if (!(fraction > 0.0) || fraction > 1.0) throw InvalidConfig("epoch fraction must lie in (0, 1]");
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(static_cast<double>(dataset_size) * fraction)));
}

void write_index(const std::filesystem::path& dir, const BucketIndex& index, const std::string& digest) {
  json buckets = json::object();
  json counts = json::object();
  std::size_t total = 0;
  for (Bucket b : kAllBuckets) {
    const auto it = index.find(b);
    const std::vector<std::string> empty;
    const auto& ids = it == index.end() ? empty : it->second;
    buckets[std::string(to_string(b))] = ids;
    counts[std::string(to_string(b))] = ids.size();
    if (b == Bucket::All) total = ids.size();
  }
  const json doc{{"format_version", kIndexFormatVersion}, {"config_digest", digest}, {"buckets", buckets}};
  const json stats{{"format_version", kIndexFormatVersion},
                   {"config_digest", digest},
                   {"total_samples", total},
                   {"counts", counts}};
  write_text_atomic(dir / "index" / "buckets.json", doc.dump(1) + "\n");
  write_text_atomic(dir / "index" / "stats.json", stats.dump(2) + "\n");
}

IndexFile read_index(const std::filesystem::path& dir) {
  const auto path = dir / "index" / "buckets.json";
  json doc;
  try {
    doc = json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  IndexFile f;
  try {
    const int version = doc.at("format_version").get<int>();
    if (version != kIndexFormatVersion) throw ParseError("unsupported index format_version " + std::to_string(version));
    f.config_digest = doc.at("config_digest").get<std::string>();
    f.index = empty_index();
    for (const auto& [name, ids] : doc.at("buckets").items())
      f.index[bucket_from_string(name)] = ids.get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return f;
}

// ------------------------------------------------------------- segmentation

std::vector<RouteSegment> segment_routes(const Polyline& route, const std::vector<ScenarioSpec>& scenarios,
                                         SegmentMode mode, double pre, double post, double target_spacing) {
  if (!(pre > 0.0) || !(post > 0.0)) throw InvalidInput("segment margins must be positive");
  if (!(target_spacing > 0.0)) throw InvalidInput("target spacing must be positive");
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    const double t = scenarios[i].trigger_distance;
    if (!(t >= 0.0 && t <= route.length()))
      throw InvalidSpec("scenario at s=" + std::to_string(t) + " lies outside the route");
    if (i > 0 && t < scenarios[i - 1].trigger_distance) throw InvalidInput("scenarios must be sorted by trigger");
  }
  const std::size_t group = mode == SegmentMode::One ? 1 : 3;
  std::vector<RouteSegment> out;
  for (std::size_t i = 0; i < scenarios.size(); i += group) {
    const std::size_t last = std::min(scenarios.size(), i + group) - 1;
    const double s0 = std::max(0.0, scenarios[i].trigger_distance - pre);
    const double s1 = std::min(route.length(), scenarios[last].trigger_distance + post);
    RouteSegment seg{s0, s1, route.slice(s0, s1), target_point_stations(s0, s1, target_spacing), {},
                     std::vector<ScenarioSpec>(scenarios.begin() + i, scenarios.begin() + last + 1)};
    for (double s : seg.target_stations) seg.target_points.push_back(route.point_at(s));
    out.push_back(std::move(seg));
  }
  return out;
}

// ------------------------------------------------------------- augmentation

namespace {

void check_limits(double shift, double rot, const AugmentationLimits& limits) {
  if (!std::isfinite(shift) || !std::isfinite(rot) || std::abs(shift) > limits.max_shift ||
      std::abs(rot) > limits.max_rot)
    throw InvalidAugmentation("perturbation (shift " + std::to_string(shift) + " m, rot " + std::to_string(rot) +
                              " rad) exceeds the configured limits");
}

template <typename F>
SampleRecord map_labels(const SampleRecord& s, F&& f) {
  SampleRecord out = s;
  for (auto& p : out.labels.path) p = f(p);
  for (auto& p : out.labels.waypoints) p = f(p);
  for (auto& p : out.labels.target_points) p = f(p);
  return out;
}

}  // namespace

SampleRecord augment_sample(const SampleRecord& s, double shift, double rot, const AugmentationLimits& limits) {
  check_limits(shift, rot, limits);
  if (shift == 0.0 && rot == 0.0) return s;
  const Pose2D frame(0.0, shift, rot);
  return map_labels(s, [&](const Vec2& p) { return frame.to_local(p); });
}

SampleRecord invert_augmentation(const SampleRecord& s, double shift, double rot, const AugmentationLimits& limits) {
  check_limits(shift, rot, limits);
  if (shift == 0.0 && rot == 0.0) return s;
  const Pose2D frame(0.0, shift, rot);
  return map_labels(s, [&](const Vec2& p) { return frame.to_parent(p); });
}

}  // namespace drivebench
