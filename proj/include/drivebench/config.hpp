#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "drivebench/control.hpp"
#include "drivebench/dataset.hpp"
#include "drivebench/expert.hpp"
#include "drivebench/metrics.hpp"
#include "drivebench/world.hpp"

namespace drivebench {

inline constexpr const char* kConfigEnvVar = "DRIVEBENCH_CONFIG";

struct EarlyStopConfig {
  double threshold = 0.0;  ///< m; 0 disables early stopping
  double steer_epsilon = 0.02;
  bool operator==(const EarlyStopConfig&) const = default;
};

struct OutputDirs {
  std::string data = "out/data";
  std::string results = "out/results";
  std::string report = "out/report";
  bool operator==(const OutputDirs&) const = default;
};

/// Everything that shapes an artifact. Output locations are carried along
/// but excluded from the digest.
struct HarnessConfig {
  std::string catalog = "catalog";
  std::string scenario_dir;  ///< empty: the bundled scenarios directory
  std::uint64_t seed = 0;    ///< added to every catalog route seed
  double speed_limit = 8.3;
  double max_episode_time = 0.0;  ///< s; 0 picks a limit from the route length

  WorldConfig world;
  ExpertConfig expert;
  ControllerConfig controller;
  BucketThresholds buckets;
  BucketWeights bucket_weights = default_bucket_weights();
  double epoch_fraction = kDefaultEpochFraction;
  PenaltyTable penalties = default_penalty_table();
  EarlyStopConfig early_stop;
  OutputDirs output;

  /// Cross-field checks; throws InvalidConfig.
  void validate() const;
  std::filesystem::path scenario_path() const;
  bool operator==(const HarnessConfig&) const = default;
};

/// Canonical JSON (sorted keys) of the full configuration.
std::string config_to_json(const HarnessConfig& config, int indent = 2);
/// Parses a configuration document. Missing keys take defaults; unknown keys
/// or wrongly typed values throw InvalidConfig.
HarnessConfig config_from_json(const std::string& text);
HarnessConfig load_config(const std::filesystem::path& path);
/// Loads `path` if given, else $DRIVEBENCH_CONFIG if set, else defaults.
HarnessConfig resolve_config(const std::string& path);

/// FNV-1a 64 over the canonical JSON without the output section, as 16 hex
/// digits.
std::string config_digest(const HarnessConfig& config);

std::uint64_t fnv1a64(const std::string& bytes);

}  // namespace drivebench
