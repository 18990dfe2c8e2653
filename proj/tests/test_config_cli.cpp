#include <gtest/gtest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "drivebench/cli.hpp"
#include "drivebench/config.hpp"
#include "drivebench/error.hpp"

using namespace drivebench;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_command(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("drivebench_cli_" + name);
  fs::remove_all(p);
  return p;
}

std::map<std::string, std::string> tree_contents(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    out[fs::relative(e.path(), root).string()] = ss.str();
  }
  return out;
}

json first_json_line(const std::string& text) { return json::parse(text.substr(0, text.find('\n'))); }

// Every scalar leaf of `j` as a JSON pointer.
void leaves(const json& j, const json::json_pointer& at, std::vector<json::json_pointer>& out) {
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) leaves(v, at / k, out);
  } else {
    out.push_back(at);
  }
}

// Candidate replacements of the same JSON type as `v`.
std::vector<json> mutations(const json& v) {
  if (v.is_boolean()) return {!v.get<bool>()};
  if (v.is_number_integer() || v.is_number_unsigned()) return {v.get<long long>() + 1, v.get<long long>() - 1};
  if (v.is_number()) {
    const double x = v.get<double>();
    if (x == 0.0) return {0.01, 1.0};
    return {x * 0.9, x * 1.1, x + 1.0, x * 0.5};
  }
  if (v.is_string()) return {v.get<std::string>() == "rollout" ? "recorded" : "plain", "elsewhere"};
  return {};
}

}  // namespace

TEST(Config, JsonRoundTrip) {
  HarnessConfig c;
  c.seed = 12345;
  c.controller.lookahead_gain = 0.8;
  c.expert.waypoint_mode = WaypointMode::RecordedFuture;
  c.bucket_weights[Bucket::Walker] = 2.5;
  c.penalties.coefficients[InfractionKind::RedLight] = 0.55;
  c.output.data = "/tmp/somewhere";
  const std::string text = config_to_json(c);
  const HarnessConfig back = config_from_json(text);
  EXPECT_EQ(back, c);
  EXPECT_EQ(config_to_json(back), text);
  EXPECT_EQ(config_from_json("{}"), HarnessConfig{});
}

TEST(Config, RejectsUnknownKeysAndWrongTypes) {
  EXPECT_THROW(config_from_json(R"({"sed": 3})"), InvalidConfig);
  EXPECT_THROW(config_from_json(R"({"expert": {"idm": {"desired_sped": 3}}})"), InvalidConfig);
  EXPECT_THROW(config_from_json(R"({"seed": "three"})"), InvalidConfig);
  EXPECT_THROW(config_from_json(R"({"controller": {"lateral": 1}})"), InvalidConfig);
  EXPECT_THROW(config_from_json(R"({"expert": {"waypoint_mode": "telepathy"}})"), InvalidConfig);
  EXPECT_THROW(config_from_json("{not json"), InvalidConfig);
}

TEST(Config, DigestTracksEveryShapingLeaf) {
  const HarnessConfig base;
  const std::string base_digest = config_digest(base);
  EXPECT_EQ(base_digest.size(), 16u);
  const json doc = json::parse(config_to_json(base));
  std::vector<json::json_pointer> ptrs;
  leaves(doc, json::json_pointer(), ptrs);
  ASSERT_GT(ptrs.size(), 80u);
  for (const auto& ptr : ptrs) {
    const bool is_output = ptr.to_string().rfind("/output/", 0) == 0;
    int accepted = 0;
    for (const json& m : mutations(doc.at(ptr))) {
      json changed = doc;
      changed[ptr] = m;
      HarnessConfig c;
      try {
        c = config_from_json(changed.dump());
      } catch (const InvalidConfig&) {
        continue;
      }
      ++accepted;
      if (is_output)
        EXPECT_EQ(config_digest(c), base_digest) << ptr.to_string();
      else
        EXPECT_NE(config_digest(c), base_digest) << ptr.to_string() << " -> " << m.dump();
    }
    EXPECT_GT(accepted, 0) << "no valid mutation for " << ptr.to_string();
  }
}

TEST(Config, Fnv1aReferenceValues) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ULL);
}

TEST(Config, EnvironmentVariableAndExplicitPath) {
  const fs::path dir = scratch("env");
  fs::create_directories(dir);
  HarnessConfig a;
  a.speed_limit = 6.0;
  HarnessConfig b;
  b.speed_limit = 7.0;
  std::ofstream(dir / "a.json") << config_to_json(a);
  std::ofstream(dir / "b.json") << config_to_json(b);
  ::setenv(kConfigEnvVar, (dir / "a.json").c_str(), 1);
  EXPECT_EQ(resolve_config("").speed_limit, 6.0);
  EXPECT_EQ(resolve_config((dir / "b.json").string()).speed_limit, 7.0);
  ::unsetenv(kConfigEnvVar);
  EXPECT_EQ(resolve_config(""), HarnessConfig{});
  EXPECT_THROW(load_config(dir / "missing.json"), IoError);
  fs::remove_all(dir);
}

TEST(Cli, UsageErrorsExitTwoWithErrorLine) {
  for (const auto& args : std::vector<std::vector<std::string>>{
           {},
           {"fly"},
           {"evaluate", "--controller", "telepathy"},
           {"stopcurve", "--lambda", "1"},
           {"--jobs", "0", "stopcurve", "--lambda", "1", "--L", "2"},
       }) {
    const CliRun r = cli(args);
    EXPECT_EQ(r.code, 2);
    const json line = first_json_line(r.err);
    EXPECT_EQ(line.at("error"), "usage");
    EXPECT_TRUE(line.contains("message"));
  }
}

TEST(Cli, RuntimeErrorsExitOneWithErrorLine) {
  CliRun r = cli({"evaluate", "--routes", "no_such_catalog", "--out", scratch("missing").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(first_json_line(r.err).at("error"), "io_error");
  r = cli({"stopcurve", "--lambda", "1", "--p", "1.5", "--L", "10"});
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(first_json_line(r.err).at("error"), "invalid_input");
  r = cli({"--config", "/nonexistent/config.json", "evaluate", "--routes", "demo", "--out", scratch("cfg").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(first_json_line(r.err).at("error"), "io_error");
}

TEST(Cli, StopCurvePrintsOptimum) {
  const CliRun r = cli({"stopcurve", "--lambda", "1", "--p", "0.6", "--L", "10"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("d* = 2.5"), std::string::npos) << r.out;
  const CliRun clamped = cli({"stopcurve", "--lambda", "1", "--p", "0.6", "--L", "2"});
  EXPECT_NE(clamped.out.find("d* = 2\n"), std::string::npos) << clamped.out;
}

TEST(Cli, CollectIsByteIdenticalAcrossRunsAndJobs) {
  const fs::path a = scratch("collect_a"), b = scratch("collect_b");
  ASSERT_EQ(cli({"--seed", "7", "collect", "--routes", "demo", "--out", a.string()}).code, 0);
  ASSERT_EQ(cli({"--seed", "7", "--jobs", "3", "collect", "--routes", "demo", "--out", b.string()}).code, 0);
  const auto ta = tree_contents(a), tb = tree_contents(b);
  EXPECT_FALSE(ta.empty());
  EXPECT_EQ(ta, tb);
  ASSERT_EQ(cli({"index", "--data", a.string()}).code, 0);
  EXPECT_TRUE(fs::exists(a / "index" / "buckets.json"));
  const CliRun s1 = cli({"--seed", "3", "sample", "--data", a.string(), "--epoch-size", "50"});
  const CliRun s2 = cli({"--seed", "3", "sample", "--data", a.string(), "--epoch-size", "50"});
  EXPECT_EQ(s1.code, 0);
  EXPECT_EQ(s1.out, s2.out);
  EXPECT_EQ(std::count(s1.out.begin(), s1.out.end(), '\n'), 50);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Cli, ReportRejectsMixedDigests) {
  const fs::path r1 = scratch("eval_1"), r2 = scratch("eval_2"), rep = scratch("report");
  ASSERT_EQ(cli({"--seed", "1", "evaluate", "--routes", "demo", "--controller", "expert", "--out", r1.string()}).code, 0);
  ASSERT_EQ(cli({"--seed", "2", "evaluate", "--routes", "demo", "--controller", "expert", "--out", r2.string()}).code, 0);
  CliRun r = cli({"report", "--results", r1.string(), "--results", r1.string(), "--out", rep.string()});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(rep / "report.csv"));
  EXPECT_TRUE(fs::exists(rep / "summary.csv"));
  r = cli({"report", "--results", r1.string(), "--results", r2.string(), "--out", rep.string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(first_json_line(r.err).at("error"), "digest_mismatch");
  fs::remove_all(r1);
  fs::remove_all(r2);
  fs::remove_all(rep);
}
