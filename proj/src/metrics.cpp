#include "drivebench/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

#include "drivebench/error.hpp"

namespace drivebench {

using nlohmann::json;

double PenaltyTable::coefficient(InfractionKind kind) const {
  const auto it = coefficients.find(kind);
  if (it == coefficients.end())
    throw MissingCoefficient("no penalty coefficient for " + std::string(to_string(kind)));
  return it->second;
}

void PenaltyTable::validate() const {
  for (const auto& [kind, c] : coefficients) {
    if (!(c > 0.0 && c <= 1.0))
      throw InvalidConfig("penalty for " + std::string(to_string(kind)) + " must lie in (0, 1]");
  }
}

PenaltyTable default_penalty_table() {
  PenaltyTable t;
  t.coefficients = {
      {InfractionKind::CollisionPedestrian, 0.50}, {InfractionKind::CollisionVehicle, 0.60},
      {InfractionKind::CollisionStatic, 0.65},     {InfractionKind::RedLight, 0.70},
      {InfractionKind::StopSign, 0.80},            {InfractionKind::RouteDeviation, 1.0},
      {InfractionKind::AgentBlocked, 1.0},
  };
  return t;
}

double route_completion(const Polyline& route, const std::vector<Pose2D>& trace,
                        const std::vector<InfractionEvent>& events) {
  if (trace.empty()) throw InvalidInput("route_completion: empty trace");
  std::size_t last = trace.size() - 1;
  for (const auto& e : events) {
    if (is_terminal(e.kind) && e.tick >= 0) last = std::min(last, static_cast<std::size_t>(e.tick));
  }
  double best = 0.0;
  for (std::size_t i = 0; i <= last; ++i) best = std::max(best, route.project(trace[i].position()).s);
  return std::clamp(best / route.length(), 0.0, 1.0);
}

double infraction_score(const std::vector<InfractionEvent>& events, const PenaltyTable& table) {
  double is = 1.0;
  for (const auto& e : events) {
    const double c = table.coefficient(e.kind);
    if (!is_terminal(e.kind)) is *= c;
  }
  return is;
}

double driving_score(double rc, double is) {
  if (!(rc >= 0.0 && rc <= 1.0)) throw InvalidInput("route completion must lie in [0, 1]");
  if (!(is > 0.0 && is <= 1.0)) throw InvalidInput("infraction score must lie in (0, 1]");
  return 100.0 * rc * is;
}

void StopModel::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InvalidInput("lambda must be a non-negative number");
  if (!(p > 0.0 && p <= 1.0)) throw InvalidInput("p must lie in (0, 1]");
  if (!(length > 0.0) || !std::isfinite(length)) throw InvalidInput("route length must be positive");
}

double expected_ds(const StopModel& m, double d) {
  m.validate();
  if (!(d > 0.0 && d <= m.length * (1.0 + 1e-12))) throw InvalidInput("stop distance must lie in (0, L]");
  return 100.0 * (d / m.length) * std::exp(-m.lambda * d * (1.0 - m.p));
}

double optimal_stop_distance(const StopModel& m) {
  m.validate();
  const double rate = m.lambda * (1.0 - m.p);
  if (rate <= 0.0) return m.length;
  return std::min(m.length, 1.0 / rate);
}

double golden_section_argmax(const std::function<double(double)>& f, double lo, double hi, double tol) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  // The maximum may sit on an endpoint of the bracket.
  double best = 0.5 * (a + b), fbest = f(best);
  for (double x : {lo, hi}) {
    const double fx = f(x);
    if (fx > fbest) {
      best = x;
      fbest = fx;
    }
  }
  return best;
}

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::size_t count_kind(const EpisodeResult& r, InfractionKind k) {
  return static_cast<std::size_t>(
      std::count_if(r.events.begin(), r.events.end(), [&](const InfractionEvent& e) { return e.kind == k; }));
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace

std::string report_csv(const std::vector<EpisodeResult>& results) {
  std::string out = std::string(kReportHeader) + "\n";
  for (const auto& r : results) {
    out += csv_field(r.route_id) + "," + csv_field(r.family) + "," + r.status + "," + fmt(r.rc) + "," +
           fmt(r.is_score) + "," + fmt(r.ds) + "," + fmt(r.distance_travelled) + "," + fmt(r.route_length) + "," +
           (r.stopped_early ? "1" : "0") + "," + std::to_string(r.events.size());
    for (auto k : kAllInfractionKinds) out += "," + std::to_string(count_kind(r, k));
    out += "\n";
  }
  return out;
}

std::string summary_csv(const std::vector<EpisodeResult>& results) {
  if (results.empty()) throw InvalidInput("summary needs at least one result");
  double ds = 0.0, rc = 0.0, is = 0.0, dist = 0.0;
  std::size_t stopped = 0;
  for (const auto& r : results) {
    ds += r.ds;
    rc += r.rc;
    is += r.is_score;
    dist += r.distance_travelled;
    stopped += r.stopped_early ? 1 : 0;
  }
  const double n = static_cast<double>(results.size());
  std::string out = std::string(kSummaryHeader) + "\n";
  out += "routes," + std::to_string(results.size()) + "\n";
  out += "mean_ds," + fmt(ds / n) + "\n";
  out += "mean_rc," + fmt(rc / n) + "\n";
  out += "mean_is," + fmt(is / n) + "\n";
  out += "distance_km," + fmt(dist / 1000.0) + "\n";
  out += "stopped_early," + std::to_string(stopped) + "\n";
  for (auto k : kAllInfractionKinds) {
    std::size_t c = 0;
    for (const auto& r : results) c += count_kind(r, k);
    const double per_km = dist > 0.0 ? static_cast<double>(c) / (dist / 1000.0) : 0.0;
    out += std::string(to_string(k)) + "_per_km," + fmt(per_km) + "\n";
  }
  return out;
}

std::string ds_curve_svg(const StopModel& m, std::optional<double> threshold_km) {
  m.validate();
  const int w = 640, h = 400, pad = 50;
  const int n = 200;
  double ymax = 0.0;
  std::vector<std::pair<double, double>> pts;
  for (int i = 1; i <= n; ++i) {
    const double d = m.length * i / n;
    const double y = expected_ds(m, d);
    pts.emplace_back(d, y);
    ymax = std::max(ymax, y);
  }
  if (ymax <= 0.0) ymax = 1.0;
  auto px = [&](double d) { return pad + (w - 2 * pad) * d / m.length; };
  auto py = [&](double y) { return h - pad - (h - 2 * pad) * y / ymax; };
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<line x1=\"" << pad << "\" y1=\"" << h - pad << "\" x2=\"" << w - pad << "\" y2=\"" << h - pad
      << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << pad << "\" y1=\"" << pad << "\" x2=\"" << pad << "\" y2=\"" << h - pad
      << "\" stroke=\"black\"/>\n";
  svg << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"";
  for (const auto& [d, y] : pts) svg << fmt(px(d)) << "," << fmt(py(y)) << " ";
  svg << "\"/>\n";
  const double dstar = optimal_stop_distance(m);
  svg << "<line x1=\"" << fmt(px(dstar)) << "\" y1=\"" << pad << "\" x2=\"" << fmt(px(dstar)) << "\" y2=\""
      << h - pad << "\" stroke=\"green\" stroke-dasharray=\"4\"/>\n";
  if (threshold_km) {
    const double t = std::clamp(*threshold_km, 0.0, m.length);
    svg << "<line x1=\"" << fmt(px(t)) << "\" y1=\"" << pad << "\" x2=\"" << fmt(px(t)) << "\" y2=\"" << h - pad
        << "\" stroke=\"red\"/>\n";
  }
  svg << "<text x=\"" << w / 2 << "\" y=\"" << h - 10 << "\" text-anchor=\"middle\">stop distance (km)</text>\n";
  svg << "<text x=\"15\" y=\"" << h / 2 << "\" transform=\"rotate(-90 15 " << h / 2
      << ")\" text-anchor=\"middle\">expected DS</text>\n";
  svg << "<text x=\"" << w - pad << "\" y=\"" << pad - 10 << "\" text-anchor=\"end\">lambda=" << fmt(m.lambda)
      << " p=" << fmt(m.p) << " L=" << fmt(m.length) << " d*=" << fmt(dstar) << "</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

void emit_report(const std::vector<EpisodeResult>& results, const std::filesystem::path& out_dir,
                 const ReportOptions& options) {
  if (results.empty()) throw InvalidInput("emit_report: no results");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec || !std::filesystem::is_directory(out_dir))
    throw IoError("cannot create report directory " + out_dir.string());
  write_file(out_dir / "report.csv", report_csv(results));
  write_file(out_dir / "summary.csv", summary_csv(results));
  if (options.svg) {
    StopModel model;
    if (options.model) {
      model = *options.model;
    } else {
      // Fit the model to the results: observed penalised infractions per km.
      double dist = 0.0, km_len = 0.0, n = 0.0;
      for (const auto& r : results) {
        dist += r.distance_travelled;
        km_len += r.route_length;
        for (const auto& e : r.events) n += is_terminal(e.kind) ? 0.0 : 1.0;
      }
      model.length = std::max(1e-3, km_len / 1000.0 / static_cast<double>(results.size()));
      model.lambda = dist > 0.0 ? n / (dist / 1000.0) : 0.0;
      model.p = 0.6;
    }
    write_file(out_dir / "ds_curve.svg", ds_curve_svg(model, options.threshold_km));
  }
}

std::string results_to_jsonl(const std::vector<EpisodeResult>& results, const std::string& digest) {
  std::string out = json{{"type", "results_header"}, {"format_version", 1}, {"config_digest", digest}}.dump() + "\n";
  for (const auto& r : results) {
    json events = json::array();
    for (const auto& e : r.events)
      events.push_back({{"kind", std::string(to_string(e.kind))},
                        {"tick", e.tick},
                        {"route_s", e.route_s},
                        {"actor_id", e.actor_id}});
    const json j{{"route_id", r.route_id},
                 {"family", r.family},
                 {"status", r.status},
                 {"rc", r.rc},
                 {"is", r.is_score},
                 {"ds", r.ds},
                 {"events", events},
                 {"distance_travelled", r.distance_travelled},
                 {"route_length", r.route_length},
                 {"stopped_early", r.stopped_early},
                 {"ticks", r.ticks},
                 {"max_lateral_error", r.max_lateral_error},
                 {"note", r.note}};
    out += j.dump() + "\n";
  }
  return out;
}

ResultsFile results_from_jsonl(const std::string& text) {
  ResultsFile f;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      if (!header) {
        if (j.value("type", std::string()) != "results_header")
          throw ParseError("first line must be the results header", line_no);
        if (j.at("format_version").get<int>() != 1) throw ParseError("unsupported results format_version", line_no);
        f.config_digest = j.at("config_digest").get<std::string>();
        header = true;
        continue;
      }
      EpisodeResult r;
      r.route_id = j.at("route_id").get<std::string>();
      r.family = j.at("family").get<std::string>();
      r.status = j.at("status").get<std::string>();
      r.rc = j.at("rc").get<double>();
      r.is_score = j.at("is").get<double>();
      r.ds = j.at("ds").get<double>();
      for (const auto& e : j.at("events"))
        r.events.push_back({infraction_kind_from_string(e.at("kind").get<std::string>()), e.at("tick").get<int>(),
                            e.at("route_s").get<double>(), e.at("actor_id").get<int>()});
      r.distance_travelled = j.at("distance_travelled").get<double>();
      r.route_length = j.at("route_length").get<double>();
      r.stopped_early = j.at("stopped_early").get<bool>();
      r.ticks = j.at("ticks").get<int>();
      r.max_lateral_error = j.at("max_lateral_error").get<double>();
      r.note = j.value("note", std::string());
      f.results.push_back(std::move(r));
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception& e) {
      throw ParseError(std::string("invalid results line: ") + e.what(), line_no);
    }
  }
  if (!header) throw ParseError("results file is empty", 1);
  return f;
}

}  // namespace drivebench
