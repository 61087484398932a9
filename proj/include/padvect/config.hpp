#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "padvect/balance.hpp"
#include "padvect/field.hpp"
#include "padvect/runtime.hpp"
#include "padvect/topology.hpp"

namespace padv {

/// Everything a run depends on. Defaults are the desk-scale settings.
struct RunConfig {
  FieldKind field = FieldKind::abc;
  std::map<std::string, double> field_parameters;  // overrides of make_field defaults
  Int3 resolution{64, 64, 64};
  std::optional<Int3> grid;  // explicit process grid; otherwise the most cubic grid for `nodes`
  std::int64_t nodes = 1;
  SchedulerKind scheduler = SchedulerKind::none;
  int dimensions = 3;
  std::optional<double> alpha;
  double aabb_scale = 1.0;
  Int3 stride{8, 8, 8};
  double step = 0.001;
  std::int32_t max_iterations = 1000;
  std::size_t particles_per_round = 50'000;
  int workers = 1;
  std::int64_t round_cap = 100'000;
  bool write_curves = true;
  std::string output = "run";

  ProcessGrid process_grid() const;
  AnalyticField analytic_field() const;
};

using Settings = std::map<std::string, std::string>;

/// Every recognised settings key, in canonical order.
const std::vector<std::string>& config_keys();

/// Parses `key = value` lines; `#` starts a comment. Throws ConfigError listing every bad line.
Settings parse_settings(std::string_view text);
Settings read_settings_file(const std::filesystem::path& path);

/// Parses a `key=value` override as given to --set.
std::pair<std::string, std::string> parse_assignment(std::string_view text);

/// Applies settings on top of the defaults and validates the result. Throws ConfigError with the
/// full list of problems.
RunConfig make_config(const Settings& settings);
void validate(const RunConfig& config);

/// Canonical key/value form; make_config(to_settings(c)) reproduces c.
Settings to_settings(const RunConfig& config);
std::string to_text(const Settings& settings);

/// FNV-1a over the canonical settings, excluding keys that cannot change results (output, workers).
std::string config_hash(const RunConfig& config);

SimulationSetup make_setup(const RunConfig& config);

}  // namespace padv
