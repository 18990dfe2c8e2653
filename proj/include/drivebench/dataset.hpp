#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "drivebench/expert.hpp"
#include "drivebench/geometry.hpp"
#include "drivebench/world.hpp"

namespace drivebench {

inline constexpr int kEpisodeFormatVersion = 1;
inline constexpr int kIndexFormatVersion = 1;

struct HazardFlags {
  bool vehicle_front = false;
  bool vehicle_left = false;
  bool vehicle_right = false;
  bool vehicle_oncoming = false;
  bool walker = false;
  bool red_light = false;
  bool stop_sign = false;

  static HazardFlags from(const Hazard& h);
  bool operator==(const HazardFlags&) const = default;
};

/// One recorded 5 fps step.
struct SampleRecord {
  std::string route_id;
  std::string scenario_kind;  ///< "none" on routes without scenarios
  int tick = 0;
  double sim_time = 0.0;
  Pose2D pose;
  double speed = 0.0;
  double accel = 0.0;  ///< centred finite difference of the recorded speed
  double steer = 0.0;  ///< expert command, rad, positive left
  ExpertLabels labels;
  HazardFlags hazards;
  bool swerving = false;
  bool starting_from_stop = false;

  std::string sample_id() const;
  bool operator==(const SampleRecord&) const = default;
};

struct EpisodeHeader {
  int format_version = kEpisodeFormatVersion;
  std::string route_id;
  std::string scenario;
  std::uint64_t seed = 0;
  std::string config_digest;
  std::string weather = "clear";  ///< metadata tag only; nothing is rendered
  bool operator==(const EpisodeHeader&) const = default;
};

struct Episode {
  EpisodeHeader header;
  std::vector<SampleRecord> records;
  bool operator==(const Episode&) const = default;
};

/// Fills `accel` from the speeds (centred differences, one-sided at the ends)
/// and refreshes `starting_from_stop`.
void label_accelerations(std::vector<SampleRecord>& records, double record_dt, double start_speed = 0.1,
                         double start_accel = 0.5);

std::string episode_to_jsonl(const Episode& episode);
/// Throws ParseError naming the offending 1-based line.
Episode episode_from_jsonl(const std::string& text);
/// Writes through a temporary file and renames, so readers never see a
/// partial episode.
void write_episode(const std::filesystem::path& path, const Episode& episode);
Episode read_episode(const std::filesystem::path& path);

enum class Bucket {
  Accel1To2,
  AccelAbove2,
  Decel1To2,
  DecelBelow2,
  StartingFromStop,
  SteerLeft,
  SteerRight,
  VehicleLeft,
  VehicleRight,
  VehicleOncoming,
  StopSign,
  RedLight,
  Walker,
  Swerve,
  All,
};

inline constexpr std::size_t kBucketCount = 15;
inline constexpr std::array<Bucket, kBucketCount> kAllBuckets = {
    Bucket::Accel1To2,    Bucket::AccelAbove2, Bucket::Decel1To2,       Bucket::DecelBelow2,
    Bucket::StartingFromStop, Bucket::SteerLeft, Bucket::SteerRight,    Bucket::VehicleLeft,
    Bucket::VehicleRight, Bucket::VehicleOncoming, Bucket::StopSign,    Bucket::RedLight,
    Bucket::Walker,       Bucket::Swerve,      Bucket::All,
};

std::string_view to_string(Bucket b);
Bucket bucket_from_string(std::string_view s);

struct BucketThresholds {
  double accel_low = 1.0;      ///< |a| below this is not an acceleration event
  double accel_high = 2.0;     ///< split between the moderate and hard buckets
  double steer = 0.087;        ///< rad, "going straight" band
  double start_speed = 0.1;    ///< m/s
  double start_accel = 0.5;    ///< m/s^2
  bool operator==(const BucketThresholds&) const = default;
};

/// Every bucket the sample belongs to, in kAllBuckets order; always ends
/// with Bucket::All.
std::vector<Bucket> classify_buckets(const SampleRecord& s, const BucketThresholds& cfg = {});

using BucketIndex = std::map<Bucket, std::vector<std::string>>;
using BucketWeights = std::map<Bucket, double>;

/// Equal weight on the 14 event buckets; `all` sized to ~10% of an epoch.
BucketWeights default_bucket_weights();

/// Appends the sample ids of `records` to `index` (all 15 buckets present).
void add_to_index(BucketIndex& index, const std::vector<SampleRecord>& records, const BucketThresholds& cfg = {});
BucketIndex empty_index();

/// Draws `epoch_size` ids with replacement: a bucket proportional to its
/// weight among non-empty weighted buckets, then a uniform id inside it.
/// Throws EmptyDataset when no weighted bucket has samples.
std::vector<std::string> sample_epoch(const BucketIndex& index, const BucketWeights& weights, std::size_t epoch_size,
                                      std::uint64_t seed);

/// 650k of 2.9M samples per epoch.
inline constexpr double kDefaultEpochFraction = 650000.0 / 2900000.0;
/// round(dataset_size * fraction), at least 1.
std::size_t epoch_size_for(std::size_t dataset_size, double fraction = kDefaultEpochFraction);

void write_index(const std::filesystem::path& dataset_dir, const BucketIndex& index, const std::string& config_digest);
struct IndexFile {
  BucketIndex index;
  std::string config_digest;
};
IndexFile read_index(const std::filesystem::path& dataset_dir);

enum class SegmentMode { One, Three };

struct RouteSegment {
  double s_begin = 0.0;
  double s_end = 0.0;
  Polyline polyline;
  std::vector<double> target_stations;  ///< route arc lengths
  std::vector<Vec2> target_points;      ///< world frame
  std::vector<ScenarioSpec> scenarios;
};

/// Cuts a long route into segments around its scenarios. Mode One gives one
/// segment per scenario; mode Three groups consecutive triples (a shorter
/// final group keeps what is left). Throws InvalidSpec for scenarios off the
/// route and InvalidInput for unsorted scenarios or non-positive margins.
std::vector<RouteSegment> segment_routes(const Polyline& route, const std::vector<ScenarioSpec>& scenarios,
                                         SegmentMode mode, double pre = 100.0, double post = 150.0,
                                         double target_spacing = 200.0);

struct AugmentationLimits {
  double max_shift = 1.5;            ///< m
  double max_rot = deg2rad(20.0);    ///< rad
};

/// Re-expresses the ego-frame labels in an ego frame moved by (0, shift) and
/// rotated by rot. World-frame and scalar fields are untouched. Throws
/// InvalidAugmentation outside the limits.
SampleRecord augment_sample(const SampleRecord& s, double shift, double rot, const AugmentationLimits& limits = {});
/// Exact inverse of augment_sample with the same parameters.
SampleRecord invert_augmentation(const SampleRecord& s, double shift, double rot,
                                 const AugmentationLimits& limits = {});

}  // namespace drivebench
