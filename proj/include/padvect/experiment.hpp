#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "padvect/config.hpp"
#include "padvect/metrics.hpp"
#include "padvect/runtime.hpp"

namespace padv {

struct RunSummary {
  std::string config_hash;
  std::int64_t node_count = 0;
  Int3 grid;
  std::string scheduler;
  double total_time_s = 0.0;        // lockstep wall time
  std::uint64_t lockstep_work = 0;  // sum of per-round max integrate steps
  std::uint64_t total_steps = 0;
  std::int64_t rounds = 0;
  std::uint64_t seeds = 0;
  std::uint64_t terminated = 0;
  std::uint64_t exited = 0;
  std::vector<std::optional<double>> lif_load;
  std::vector<std::optional<double>> lif_steps;
  std::array<double, kStageCount> stage_totals_s{};
  Settings config;
};

std::string summary_to_json(const RunSummary& summary);
RunSummary summary_from_json(const std::string& text);
RunSummary read_summary(const std::filesystem::path& path);

/// Mean of the defined entries of a LIF series.
std::optional<double> mean_lif(const std::vector<std::optional<double>>& series);

struct RunOutputs {
  RunResult result;
  RunSummary summary;
};

/// Seeds, runs the round loop to completion and, when `write_files`, writes rounds.csv, lif.csv,
/// summary.json, config.txt and (if enabled) curves.f64 under config.output.
RunOutputs run_experiment(const RunConfig& config, bool write_files = true);

RunSummary summarize(const RunConfig& config, const RunResult& result);

/// Converts a run directory's curves.f64 into a float32 line-set file.
void export_curves(const std::filesystem::path& run_dir, const std::filesystem::path& out);

/// Speedup table grouped by scheduler, relative to the smallest node count of each group.
/// CSV columns: scheduler,nodes,grid,aabb_scale,stride,total_time_s,lockstep_work,speedup_time,speedup_work
std::string compare_table(const std::vector<RunSummary>& summaries);

enum class SweepKind { strong, weak, balance, param };
SweepKind parse_sweep_kind(std::string_view token);
std::string_view to_string(SweepKind kind);

struct SweepOptions {
  std::vector<std::int64_t> node_counts{2, 4, 8, 16};
  std::vector<Int3> weak_strides{{8, 8, 8}, {8, 8, 4}, {8, 4, 4}, {4, 4, 4}};
  std::vector<SchedulerKind> schedulers{SchedulerKind::none, SchedulerKind::constant, SchedulerKind::lma,
                                        SchedulerKind::gllma};
  std::string param_key = "aabb_scale";
  std::vector<std::string> param_values{"0.25", "0.5", "1.0"};
};

/// Member configurations of a sweep, output directories nested under base.output/<kind>/.
std::vector<RunConfig> sweep_configs(SweepKind kind, const RunConfig& base, const SweepOptions& options = {});

struct SweepResult {
  std::vector<RunSummary> summaries;
  std::string table;  // compare_table over the members
};

/// Runs every member in order and writes <base.output>/<kind>/speedup.csv. A failing member aborts
/// the sweep; completed member outputs stay on disk.
SweepResult run_sweep(SweepKind kind, const RunConfig& base, const SweepOptions& options = {});

}  // namespace padv
