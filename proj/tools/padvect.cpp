// Command-line experiment runner.
#include <cstdio>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "padvect/config.hpp"
#include "padvect/errors.hpp"
#include "padvect/experiment.hpp"

namespace {

enum ExitCode : int { kOk = 0, kFailure = 1, kConfigError = 2, kInvariant = 3, kRoundCap = 4 };

// Values of the per-key long flags (--resolution, --scheduler, ...), filled by CLI11.
std::map<std::string, std::string> flag_values;

void add_key_flags(CLI::App* cmd) {
  for (const auto& key : padv::config_keys())
    cmd->add_option("--" + key, flag_values[key], "Config key " + key)->group("Config keys");
}

// File first, then per-key flags, then --set assignments.
padv::RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  padv::Settings settings;
  if (!path.empty()) settings = padv::read_settings_file(path);
  for (const auto& [key, value] : flag_values)
    if (!value.empty()) settings[key] = value;
  std::vector<std::string> problems;
  for (const auto& o : overrides) {
    try {
      auto [k, v] = padv::parse_assignment(o);
      settings[k] = v;
    } catch (const padv::ConfigError& e) {
      problems.push_back(e.what());
    }
  }
  if (!problems.empty()) throw padv::ConfigError(std::move(problems));
  return padv::make_config(settings);
}

void print_run(const padv::RunSummary& s, const std::string& dir) {
  const auto lif = padv::mean_lif(s.lif_steps);
  std::printf("%s: %lld ranks, scheduler %s, %lld rounds, %llu seeds, lockstep work %llu, mean LIF(steps) %s\n",
              dir.c_str(), static_cast<long long>(s.node_count), s.scheduler.c_str(), static_cast<long long>(s.rounds),
              static_cast<unsigned long long>(s.seeds), static_cast<unsigned long long>(s.lockstep_work),
              lif ? padv::format_real(*lif).c_str() : "NA");
}

std::vector<std::string> split_commas(const std::string& text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = text.find(',', start);
    out.push_back(text.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed particle advection simulator with diffusive load balancing"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;

  auto* run = app.add_subcommand("run", "Run one configuration");
  run->add_option("--config", config_path, "key = value config file");
  run->add_option("--set", overrides, "Override a config key (key=value), repeatable");
  add_key_flags(run);

  std::string sweep_kind;
  std::string axis = "aabb_scale";
  std::string axis_values = "0.25,0.5,1.0";
  auto* sweep = app.add_subcommand("sweep", "Run a strong, weak, balance or parameter sweep");
  sweep->add_option("--kind", sweep_kind, "strong|weak|balance|param")->required();
  sweep->add_option("--config", config_path, "Base configuration file");
  sweep->add_option("--set", overrides, "Override a base config key (key=value), repeatable");
  sweep->add_option("--axis", axis, "Config key varied by a param sweep");
  sweep->add_option("--values", axis_values, "Comma-separated values for --axis");
  add_key_flags(sweep);

  std::vector<std::string> summaries;
  auto* compare = app.add_subcommand("compare", "Print a speedup table (CSV) for summary.json files");
  compare->add_option("summaries", summaries, "summary.json files")->required()->check(CLI::ExistingFile);

  std::string run_dir;
  std::string out_file;
  auto* export_cmd = app.add_subcommand("export-curves", "Write a run's curves as a float32 line-set file");
  export_cmd->add_option("--run", run_dir, "Run output directory")->required()->check(CLI::ExistingDirectory);
  export_cmd->add_option("--out", out_file, "Destination file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*run) {
      const auto config = load_config(config_path, overrides);
      const auto outputs = padv::run_experiment(config);
      print_run(outputs.summary, config.output);
    } else if (*sweep) {
      const auto kind = padv::parse_sweep_kind(sweep_kind);
      const auto base = load_config(config_path, overrides);
      padv::SweepOptions options;
      options.param_key = axis;
      options.param_values = split_commas(axis_values);
      const auto result = padv::run_sweep(kind, base, options);
      for (const auto& s : result.summaries) print_run(s, s.config.at("output"));
      std::cout << result.table;
    } else if (*compare) {
      std::vector<padv::RunSummary> loaded;
      for (const auto& path : summaries) loaded.push_back(padv::read_summary(path));
      std::cout << padv::compare_table(loaded);
    } else if (*export_cmd) {
      padv::export_curves(run_dir, out_file);
    }
  } catch (const padv::ConfigError& e) {
    std::cerr << e.what() << '\n';
    return kConfigError;
  } catch (const padv::InvariantViolation& e) {
    std::cerr << "invariant violation: " << e.what() << '\n';
    return kInvariant;
  } catch (const padv::RoundCapExceeded& e) {
    std::cerr << e.what() << '\n';
    return kRoundCap;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kOk;
}
