#include "drivebench/cli.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "drivebench/config.hpp"
#include "drivebench/error.hpp"
#include "drivebench/harness.hpp"

namespace drivebench {

namespace {

void error_line(std::ostream& err, const std::string& code, const std::string& message) {
  err << nlohmann::json{{"error", code}, {"message", message}}.dump() << "\n";
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot open " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + p.string());
  out << text;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

struct Options {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int jobs = 1;

  std::string routes;
  std::string out;
  std::string data;
  std::string waypoints;
  std::string controller = "semi";
  double early_stop = -1.0;
  std::size_t epoch_size = 0;
  double fraction = 0.0;
  std::vector<std::string> results;
  bool svg = false;
  double lambda = -1.0;
  double p = 0.6;
  double length = -1.0;
  double threshold = -1.0;
  std::string svg_path;
};

HarnessConfig make_config(const Options& o) {
  HarnessConfig c = resolve_config(o.config_path);
  if (o.seed_set) c.seed = o.seed;
  if (!o.routes.empty()) c.catalog = o.routes;
  if (o.early_stop >= 0.0) c.early_stop.threshold = o.early_stop;
  if (!o.waypoints.empty()) {
    if (o.waypoints == "rollout") {
      c.expert.waypoint_mode = WaypointMode::Rollout;
    } else if (o.waypoints == "recorded") {
      c.expert.waypoint_mode = WaypointMode::RecordedFuture;
    } else {
      throw InvalidConfig("--waypoints must be rollout or recorded");
    }
  }
  c.validate();
  return c;
}

int cmd_collect(const Options& o, std::ostream&, std::ostream& err) {
  const HarnessConfig c = make_config(o);
  const std::filesystem::path dir = o.out.empty() ? c.output.data : o.out;
  const std::size_t n = collect(c, dir, o.jobs);
  err << "collected " << n << " samples into " << dir.string() << " (config " << config_digest(c) << ")\n";
  return kExitOk;
}

int cmd_index(const Options& o, std::ostream&, std::ostream& err) {
  const HarnessConfig c = make_config(o);
  const std::filesystem::path dir = o.data.empty() ? c.output.data : o.data;
  const BucketIndex idx = build_index(c, dir);
  err << "indexed " << idx.at(Bucket::All).size() << " samples in " << dir.string() << "\n";
  return kExitOk;
}

int cmd_sample(const Options& o, std::ostream& out, std::ostream& err) {
  const HarnessConfig c = make_config(o);
  const std::filesystem::path dir = o.data.empty() ? c.output.data : o.data;
  const IndexFile idx = read_index(dir);
  const std::size_t total = idx.index.at(Bucket::All).size();
  const std::size_t n = o.epoch_size > 0 ? o.epoch_size : epoch_size_for(total, o.fraction > 0.0 ? o.fraction : c.epoch_fraction);
  const auto ids = sample_epoch(idx.index, c.bucket_weights, n, c.seed);
  std::string text;
  for (const auto& id : ids) text += id + "\n";
  if (o.out.empty()) {
    out << text;
  } else {
    write_file(o.out, text);
  }
  err << "sampled " << ids.size() << " of " << total << " samples\n";
  return kExitOk;
}

int cmd_evaluate(const Options& o, std::ostream&, std::ostream& err) {
  const HarnessConfig c = make_config(o);
  const ControllerKind kind = controller_kind_from_string(o.controller);
  const std::filesystem::path dir = o.out.empty() ? c.output.results : o.out;
  const auto results = evaluate(c, kind, o.jobs);
  std::filesystem::create_directories(dir);
  write_file(dir / "results.jsonl", results_to_jsonl(results, config_digest(c)));
  double ds = 0.0;
  for (const auto& r : results) ds += r.ds;
  err << "evaluated " << results.size() << " routes with the " << to_string(kind) << " controller, mean DS "
      << fmt(ds / std::max<std::size_t>(1, results.size())) << "\n";
  return kExitOk;
}

int cmd_report(const Options& o, std::ostream&, std::ostream& err) {
  const HarnessConfig c = make_config(o);
  std::vector<std::filesystem::path> inputs;
  if (o.results.empty()) inputs.push_back(std::filesystem::path(c.output.results));
  for (const auto& r : o.results) inputs.emplace_back(r);
  std::vector<EpisodeResult> all;
  std::string digest;
  for (auto p : inputs) {
    if (std::filesystem::is_directory(p)) p /= "results.jsonl";
    const ResultsFile f = results_from_jsonl(read_file(p));
    if (digest.empty()) digest = f.config_digest;
    if (f.config_digest != digest)
      throw DigestMismatch(p.string() + " was produced with config " + f.config_digest + ", expected " + digest);
    all.insert(all.end(), f.results.begin(), f.results.end());
  }
  ReportOptions ro;
  ro.svg = o.svg;
  ro.config_digest = digest;
  if (o.lambda >= 0.0) {
    StopModel m;
    m.lambda = o.lambda;
    m.p = o.p;
    double km = 0.0;
    for (const auto& r : all) km += r.route_length / 1000.0;
    m.length = o.length > 0.0 ? o.length : km / std::max<std::size_t>(1, all.size());
    ro.model = m;
  }
  if (o.threshold >= 0.0) ro.threshold_km = o.threshold / 1000.0;
  const std::filesystem::path dir = o.out.empty() ? c.output.report : o.out;
  emit_report(all, dir, ro);
  err << "wrote report for " << all.size() << " routes to " << dir.string() << "\n";
  return kExitOk;
}

int cmd_stopcurve(const Options& o, std::ostream& out, std::ostream&) {
  if (o.lambda < 0.0 || o.length <= 0.0) throw InvalidInput("stopcurve needs --lambda >= 0 and --L > 0");
  StopModel m{o.lambda, o.p, o.length};
  const double d = optimal_stop_distance(m);
  const double numeric = golden_section_argmax([&](double x) { return expected_ds(m, x); }, 1e-9 * m.length, m.length);
  out << "d* = " << fmt(d) << "\n";
  out << "golden_section = " << fmt(numeric) << "\n";
  out << "expected_ds(d*) = " << fmt(expected_ds(m, d)) << "\n";
  out << "expected_ds(L) = " << fmt(expected_ds(m, m.length)) << "\n";
  if (!o.svg_path.empty()) write_file(o.svg_path, ds_curve_svg(m, std::nullopt));
  return kExitOk;
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Closed-loop driving harness: data collection, curation, evaluation and reporting", "drivebench"};
  app.require_subcommand(1);
  Options o;
  app.add_option("--config", o.config_path, std::string("Configuration file (default: $") + kConfigEnvVar + ")");
  app.add_option("--seed", o.seed, "Seed added to every catalog route seed and used by the sampler")
      ->each([&](const std::string&) { o.seed_set = true; });
  app.add_option("--jobs", o.jobs, "Episodes run concurrently")->check(CLI::PositiveNumber);
  app.fallthrough();

  auto* collect_cmd = app.add_subcommand("collect", "Run the expert over a route catalog and record episodes");
  collect_cmd->add_option("--routes", o.routes, "Catalog name or path");
  collect_cmd->add_option("--out", o.out, "Dataset directory");
  collect_cmd->add_option("--waypoints", o.waypoints, "Waypoint labels: rollout or recorded")
      ->check(CLI::IsMember({"rollout", "recorded"}));

  auto* index_cmd = app.add_subcommand("index", "Build the bucket index of a dataset");
  index_cmd->add_option("--data", o.data, "Dataset directory");

  auto* sample_cmd = app.add_subcommand("sample", "Draw one epoch of sample ids");
  sample_cmd->add_option("--data", o.data, "Dataset directory");
  sample_cmd->add_option("--epoch-size", o.epoch_size, "Samples per epoch (default: fraction of the dataset)");
  sample_cmd->add_option("--fraction", o.fraction, "Epoch size as a fraction of the dataset")
      ->check(CLI::Range(0.0, 1.0));
  sample_cmd->add_option("--out", o.out, "Write ids here instead of standard output");

  auto* eval_cmd = app.add_subcommand("evaluate", "Closed-loop evaluation of a controller");
  eval_cmd->add_option("--routes", o.routes, "Catalog name or path");
  eval_cmd->add_option("--controller", o.controller, "semi | entangled | expert")
      ->check(CLI::IsMember({"semi", "semi-disentangled", "entangled", "expert", "expert-direct"}));
  eval_cmd->add_option("--early-stop", o.early_stop, "Stop after this many metres (0 disables)")
      ->check(CLI::NonNegativeNumber);
  eval_cmd->add_option("--out", o.out, "Results directory");

  auto* report_cmd = app.add_subcommand("report", "Write CSV summaries (and optionally the DS curve)");
  report_cmd->add_option("--results", o.results, "Results files or directories");
  report_cmd->add_option("--out", o.out, "Report directory");
  report_cmd->add_flag("--svg", o.svg, "Also write ds_curve.svg");
  report_cmd->add_option("--lambda", o.lambda, "Infractions per km for the DS curve");
  report_cmd->add_option("--p", o.p, "Penalty per infraction for the DS curve");
  report_cmd->add_option("--L", o.length, "Route length in km for the DS curve");
  report_cmd->add_option("--threshold", o.threshold, "Early-stop threshold in metres to mark");

  auto* curve_cmd = app.add_subcommand("stopcurve", "Optimal early-stopping distance of the Poisson model");
  curve_cmd->add_option("--lambda", o.lambda, "Infractions per km")->required();
  curve_cmd->add_option("--p", o.p, "Penalty coefficient per infraction");
  curve_cmd->add_option("--L", o.length, "Route length in km")->required();
  curve_cmd->add_option("--svg", o.svg_path, "Write the expected-DS curve to this file");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    error_line(err, "usage", e.what());
    err << app.help();
    return kExitUsage;
  }

  try {
    if (collect_cmd->parsed()) return cmd_collect(o, out, err);
    if (index_cmd->parsed()) return cmd_index(o, out, err);
    if (sample_cmd->parsed()) return cmd_sample(o, out, err);
    if (eval_cmd->parsed()) return cmd_evaluate(o, out, err);
    if (report_cmd->parsed()) return cmd_report(o, out, err);
    if (curve_cmd->parsed()) return cmd_stopcurve(o, out, err);
  } catch (const Error& e) {
    error_line(err, e.code(), e.what());
    return kExitRuntime;
  } catch (const std::exception& e) {
    error_line(err, "internal", e.what());
    return kExitRuntime;
  }
  error_line(err, "usage", "no subcommand given");
  return kExitUsage;
}

}  // namespace drivebench
