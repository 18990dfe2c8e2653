#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "drivebench/config.hpp"
#include "drivebench/dataset.hpp"
#include "drivebench/metrics.hpp"
#include "drivebench/routes.hpp"

namespace drivebench {

enum class ControllerKind { Expert, SemiDisentangled, Entangled };

std::string_view to_string(ControllerKind k);
/// Accepts expert | expert-direct | semi | semi-disentangled | entangled.
ControllerKind controller_kind_from_string(std::string_view s);

struct EpisodeOptions {
  ControllerKind controller = ControllerKind::Expert;
  bool record = false;  ///< produce 5 fps SampleRecords
};

struct EpisodeRun {
  EpisodeResult result;
  Episode episode;              ///< filled when recording
  std::vector<Pose2D> trace;    ///< ego pose per tick, index = tick
};

/// Catalog routes for the configuration, with the config seed applied.
std::vector<RouteInstance> load_routes(const HarnessConfig& config);

/// Runs one closed-loop episode until the route end, a terminal infraction,
/// an early stop or the time limit.
EpisodeRun run_episode(const RouteInstance& route, const HarnessConfig& config, const EpisodeOptions& options,
                       const std::string& config_digest);

/// Applies fn(i) for i in [0, n) on up to `jobs` threads. Exceptions are
/// rethrown on the caller after all workers finish.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

/// Runs the expert on every route and writes `<dir>/episodes/<route>.jsonl`.
/// Returns the number of records written.
std::size_t collect(const HarnessConfig& config, const std::filesystem::path& data_dir, int jobs = 1);

/// Reads every episode under `data_dir` and writes the bucket index. Throws
/// DigestMismatch when episodes come from different configurations.
BucketIndex build_index(const HarnessConfig& config, const std::filesystem::path& data_dir);

std::vector<EpisodeResult> evaluate(const HarnessConfig& config, ControllerKind controller, int jobs = 1);

}  // namespace drivebench
