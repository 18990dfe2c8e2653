#include "drivebench/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "drivebench/error.hpp"
#include "drivebench/expert.hpp"

namespace drivebench {

std::string_view to_string(ControllerKind k) {
  switch (k) {
    case ControllerKind::Expert: return "expert";
    case ControllerKind::SemiDisentangled: return "semi";
    case ControllerKind::Entangled: return "entangled";
  }
  return "expert";
}

ControllerKind controller_kind_from_string(std::string_view s) {
  if (s == "expert" || s == "expert-direct") return ControllerKind::Expert;
  if (s == "semi" || s == "semi-disentangled") return ControllerKind::SemiDisentangled;
  if (s == "entangled") return ControllerKind::Entangled;
  throw InvalidInput("unknown controller '" + std::string(s) + "' (expected semi, entangled or expert)");
}

std::vector<RouteInstance> load_routes(const HarnessConfig& config) {
  ScenarioCatalog catalog = load_catalog(resolve_catalog_path(config.catalog, config.scenario_path()));
  for (auto& e : catalog.entries) e.seed += config.seed;
  return expand_catalog(catalog);
}

namespace {

double episode_time_limit(const HarnessConfig& c, double length) {
  if (c.max_episode_time > 0.0) return c.max_episode_time;
  return std::max(120.0, 4.0 * length / c.speed_limit + 60.0);
}

void fill_recorded_future(std::vector<SampleRecord>& records, const std::vector<Pose2D>& trace, int per_wp, int m) {
  for (auto& r : records) {
    r.labels.waypoints.clear();
    for (int k = 1; k <= m; ++k) {
      const std::size_t t = std::min(trace.size() - 1, static_cast<std::size_t>(r.tick + k * per_wp));
      r.labels.waypoints.push_back(r.pose.to_local(trace[t].position()));
    }
  }
}

}  // namespace

EpisodeRun run_episode(const RouteInstance& inst, const HarnessConfig& cfg, const EpisodeOptions& opt,
                       const std::string& digest) {
  WorldState w = build_route_world(inst, cfg.world, cfg.speed_limit);
  const Polyline& route = *inst.route;
  const double length = route.length();

  ExpertConfig ecfg = cfg.expert;
  const bool recorded_future = opt.controller == ControllerKind::Expert && ecfg.waypoint_mode == WaypointMode::RecordedFuture;
  // Closed-loop controllers consume waypoints live, which only the rollout can provide.
  if (opt.controller != ControllerKind::Expert) ecfg.waypoint_mode = WaypointMode::Rollout;
  ExpertPolicy expert(ecfg);
  ControllerState state(cfg.controller);
  StopPolicy stop{cfg.early_stop.threshold, cfg.early_stop.steer_epsilon, 0.0, false};
  const bool use_stop = cfg.early_stop.threshold > 0.0;
  const double time_limit = episode_time_limit(cfg, length);

  EpisodeRun run;
  EpisodeResult& res = run.result;
  res.route_id = inst.route_id;
  res.family = inst.family;
  res.route_length = length;
  run.trace.push_back(w.ego.pose);

  const std::string scenario = inst.scenarios.empty() ? "none" : std::string(to_string(inst.scenarios.front().kind));
  std::vector<SampleRecord> records;

  res.status = "timeout";
  while (true) {
    if (w.ego_route_s >= length - 1e-6) {
      res.status = "completed";
      break;
    }
    if (w.monitor.terminated) {
      res.status = "terminated";
      break;
    }
    if (w.elapsed() >= time_limit - 1e-9) break;

    const bool record_tick = opt.record && w.tick % cfg.world.record_every == 0;
    ControlCommand cmd;
    ExpertLabels labels;
    try {
      if (opt.controller == ControllerKind::Expert && !record_tick) {
        cmd = expert.decide(w).control;
      } else {
        ExpertStep step = expert.act(w);
        labels = std::move(step.labels);
        switch (opt.controller) {
          case ControllerKind::Expert:
            cmd = step.control;
            break;
          case ControllerKind::SemiDisentangled:
            cmd = semi_disentangled_control(DrivingOutput{labels.path, labels.waypoints, std::nullopt}, w.ego.speed,
                                            state, cfg.controller);
            break;
          case ControllerKind::Entangled:
            cmd = entangled_control(labels.waypoints, w.ego.speed, state, cfg.controller);
            break;
        }
      }
      const PlannedPath& plan = expert.planned_path(w);
      const Projection pr = plan.line.project(w.ego.pose.position(), w.ego_route_s - 10.0, w.ego_route_s + 10.0);
      if (w.ego_route_s < length - 1e-6) res.max_lateral_error = std::max(res.max_lateral_error, std::abs(pr.d));
    } catch (const Unplannable& e) {
      res.status = "aborted";
      res.note = e.what();
      break;
    }

    if (use_stop && early_stop_filter(stop, cmd.steer, w.odometer, w.in_intersection()) == StopDecision::Stop) {
      res.stopped_early = true;
      res.status = "stopped_early";
      break;
    }

    if (record_tick) {
      SampleRecord r;
      r.route_id = inst.route_id;
      r.scenario_kind = scenario;
      r.tick = w.tick;
      r.sim_time = w.elapsed();
      r.pose = w.ego.pose;
      r.speed = w.ego.speed;
      r.steer = cmd.steer;
      r.labels = labels;
      r.hazards = HazardFlags::from(labels.hazard);
      r.swerving = labels.swerving;
      records.push_back(std::move(r));
    }

    auto events = advance_world(w, cmd.accel, cmd.steer);
    res.events.insert(res.events.end(), events.begin(), events.end());
    run.trace.push_back(w.ego.pose);
  }

  res.ticks = w.tick;
  res.distance_travelled = w.odometer;
  res.rc = route_completion(route, run.trace, res.events);
  res.is_score = infraction_score(res.events, cfg.penalties);
  res.ds = driving_score(res.rc, res.is_score);

  if (opt.record) {
    const double record_dt = cfg.world.record_every * cfg.world.sim_dt;
    label_accelerations(records, record_dt, cfg.buckets.start_speed, cfg.buckets.start_accel);
    if (recorded_future) {
      const int per_wp = static_cast<int>(std::lround(ecfg.waypoint_dt / cfg.world.sim_dt));
      fill_recorded_future(records, run.trace, per_wp, ecfg.waypoints);
    }
    run.episode.header.route_id = inst.route_id;
    run.episode.header.scenario = scenario;
    run.episode.header.seed = inst.seed;
    run.episode.header.config_digest = digest;
    run.episode.records = std::move(records);
  }
  return run;
}

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, jobs)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < workers; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

std::size_t collect(const HarnessConfig& config, const std::filesystem::path& data_dir, int jobs) {
  config.validate();
  const auto routes = load_routes(config);
  const std::string digest = config_digest(config);
  const auto episodes_dir = data_dir / "episodes";
  std::filesystem::create_directories(episodes_dir);
  std::vector<std::size_t> counts(routes.size(), 0);
  parallel_for(routes.size(), jobs, [&](std::size_t i) {
    EpisodeRun run = run_episode(routes[i], config, {ControllerKind::Expert, true}, digest);
    counts[i] = run.episode.records.size();
    write_episode(episodes_dir / (routes[i].route_id + ".jsonl"), run.episode);
  });
  std::size_t total = 0;
  for (auto c : counts) total += c;
  return total;
}

BucketIndex build_index(const HarnessConfig& config, const std::filesystem::path& data_dir) {
  const auto episodes_dir = data_dir / "episodes";
  if (!std::filesystem::is_directory(episodes_dir)) throw IoError("no episodes directory in " + data_dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(episodes_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw EmptyDataset("no episode files in " + episodes_dir.string());
  BucketIndex index = empty_index();
  std::string digest;
  for (const auto& f : files) {
    const Episode e = read_episode(f);
    if (digest.empty()) digest = e.header.config_digest;
    if (e.header.config_digest != digest)
      throw DigestMismatch("episode " + f.filename().string() + " has config digest " + e.header.config_digest +
                           ", expected " + digest);
    add_to_index(index, e.records, config.buckets);
  }
  write_index(data_dir, index, digest);
  return index;
}

std::vector<EpisodeResult> evaluate(const HarnessConfig& config, ControllerKind controller, int jobs) {
  config.validate();
  const auto routes = load_routes(config);
  const std::string digest = config_digest(config);
  std::vector<EpisodeResult> results(routes.size());
  parallel_for(routes.size(), jobs, [&](std::size_t i) {
    results[i] = run_episode(routes[i], config, {controller, false}, digest).result;
  });
  return results;
}

}  // namespace drivebench
