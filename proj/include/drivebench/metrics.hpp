#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "drivebench/geometry.hpp"
#include "drivebench/world.hpp"

namespace drivebench {

/// Multiplicative penalty per infraction kind. Terminal kinds end the
/// episode and freeze route completion instead of scaling the score.
struct PenaltyTable {
  std::map<InfractionKind, double> coefficients;

  /// Throws MissingCoefficient for kinds absent from the table.
  double coefficient(InfractionKind kind) const;
  /// Throws InvalidConfig unless every coefficient lies in (0, 1].
  void validate() const;
  bool operator==(const PenaltyTable&) const = default;
};

PenaltyTable default_penalty_table();

/// Highest route station reached by the trace (index = tick), considering
/// only poses up to the first terminal event, divided by the route length.
double route_completion(const Polyline& route, const std::vector<Pose2D>& trace,
                        const std::vector<InfractionEvent>& events);

/// Product of the coefficients of the non-terminal events; 1 when empty.
double infraction_score(const std::vector<InfractionEvent>& events, const PenaltyTable& table);

/// 100 * rc * is. Throws InvalidInput outside rc in [0, 1], is in (0, 1].
double driving_score(double rc, double is);

struct EpisodeResult {
  std::string route_id;
  std::string family;
  std::string status;  ///< completed | terminated | timeout | stopped_early | aborted
  double rc = 0.0;
  double is_score = 1.0;
  double ds = 0.0;
  std::vector<InfractionEvent> events;
  double distance_travelled = 0.0;  ///< m
  double route_length = 0.0;        ///< m
  bool stopped_early = false;
  int ticks = 0;
  double max_lateral_error = 0.0;  ///< m from the planned path
  std::string note;

  bool operator==(const EpisodeResult&) const = default;
};

/// Poisson infraction model behind the early-stopping trade-off. Distances
/// in km, lambda in infractions per km.
struct StopModel {
  double lambda = 0.0;
  double p = 0.6;
  double length = 1.0;

  void validate() const;
};

/// 100 (d/L) exp(-lambda d (1 - p)), the mean of 100 (d/L) p^N with
/// N ~ Poisson(lambda d).
double expected_ds(const StopModel& model, double d);

/// min(L, 1 / (lambda (1 - p))); L when lambda is 0.
double optimal_stop_distance(const StopModel& model);

/// Argmax of a unimodal function on [lo, hi] by golden-section search.
double golden_section_argmax(const std::function<double(double)>& f, double lo, double hi, double tol = 1e-9);

struct ReportOptions {
  bool svg = false;
  std::optional<StopModel> model;      ///< drawn in ds_curve.svg
  std::optional<double> threshold_km;  ///< marked on the curve
  std::string config_digest;
};

inline constexpr const char* kReportHeader =
    "route_id,family,status,rc,is,ds,distance_m,route_length_m,stopped_early,n_events,"
    "collision_pedestrian,collision_vehicle,collision_static,red_light,stop_sign,route_deviation,agent_blocked";
inline constexpr const char* kSummaryHeader = "metric,value";

std::string report_csv(const std::vector<EpisodeResult>& results);
std::string summary_csv(const std::vector<EpisodeResult>& results);
std::string ds_curve_svg(const StopModel& model, std::optional<double> threshold_km);

/// Writes report.csv, summary.csv and optionally ds_curve.svg. Throws
/// InvalidInput for an empty result list and IoError when unwritable.
void emit_report(const std::vector<EpisodeResult>& results, const std::filesystem::path& out_dir,
                 const ReportOptions& options = {});

/// Results as JSON lines behind a header carrying the config digest.
std::string results_to_jsonl(const std::vector<EpisodeResult>& results, const std::string& config_digest);
struct ResultsFile {
  std::string config_digest;
  std::vector<EpisodeResult> results;
};
ResultsFile results_from_jsonl(const std::string& text);

}  // namespace drivebench
