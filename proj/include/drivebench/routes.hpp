#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "drivebench/world.hpp"

namespace drivebench {

/// Synthetic route shapes. `Scenario` keeps the scenario region straight and
/// bends afterwards; `StopTurn` starts halted at a red light in front of a
/// tight 90 degree turn lined with curb blocks on its outer side.
enum class RouteGeometry { Straight, Turns, Scenario, StopTurn };

std::string_view to_string(RouteGeometry g);
RouteGeometry route_geometry_from_string(std::string_view s);

/// One catalog entry; expands into `count` seeded routes.
struct CatalogEntry {
  std::string name;
  RouteGeometry geometry = RouteGeometry::Scenario;
  double length = 300.0;
  int count = 1;
  std::uint64_t seed = 0;
  std::vector<ScenarioSpec> scenarios;
};

struct ScenarioCatalog {
  int format_version = 1;
  std::vector<CatalogEntry> entries;
};

/// Parses a catalog document; throws ParseError / InvalidSpec.
ScenarioCatalog parse_catalog(const std::string& json_text);
ScenarioCatalog load_catalog(const std::filesystem::path& path);
/// Resolves `name_or_path`: an existing file, else `<dir>/<name>.json`.
std::filesystem::path resolve_catalog_path(const std::string& name_or_path, const std::filesystem::path& dir);

struct RouteInstance {
  std::string route_id;
  std::string family;
  RouteGeometry geometry = RouteGeometry::Scenario;
  std::uint64_t seed = 0;
  std::shared_ptr<const Polyline> route;
  std::vector<ScenarioSpec> scenarios;
};

/// Deterministic route centreline for a geometry family.
Polyline generate_route(RouteGeometry geometry, double length, std::uint64_t seed,
                        const std::vector<ScenarioSpec>& scenarios = {});

std::vector<RouteInstance> expand_catalog(const ScenarioCatalog& catalog);

/// Route world with every scenario and geometry fixture in place.
WorldState build_route_world(const RouteInstance& instance, const WorldConfig& config = {},
                             double speed_limit = 8.3);

/// Arc lengths of target points: every `spacing` metres from `start`, then `end`.
std::vector<double> target_point_stations(double start, double end, double spacing = 200.0);

}  // namespace drivebench
