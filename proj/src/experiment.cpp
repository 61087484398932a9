#include "padvect/experiment.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "padvect/errors.hpp"

namespace padv {

namespace {

using nlohmann::json;

json optional_series(const std::vector<std::optional<double>>& series) {
  json out = json::array();
  for (const auto& v : series) out.push_back(v ? json(*v) : json(nullptr));
  return out;
}

std::vector<std::optional<double>> series_from(const json& j) {
  std::vector<std::optional<double>> out;
  for (const auto& v : j) out.push_back(v.is_null() ? std::nullopt : std::optional<double>(v.get<double>()));
  return out;
}

constexpr std::array<const char*, kStageCount> kStageNames = {"lb_distribute", "round_info", "alloc",
                                                              "integrate",     "collect",    "oob"};

std::string triple_label(const Int3& t) {
  return std::to_string(t.x) + "x" + std::to_string(t.y) + "x" + std::to_string(t.z);
}

}  // namespace

std::string summary_to_json(const RunSummary& s) {
  json j;
  j["config_hash"] = s.config_hash;
  j["node_count"] = s.node_count;
  j["grid"] = {s.grid.x, s.grid.y, s.grid.z};
  j["scheduler"] = s.scheduler;
  j["total_time_s"] = s.total_time_s;
  j["lockstep_work"] = s.lockstep_work;
  j["total_steps"] = s.total_steps;
  j["rounds"] = s.rounds;
  j["seeds"] = s.seeds;
  j["terminated"] = s.terminated;
  j["exited"] = s.exited;
  j["lif_load"] = optional_series(s.lif_load);
  j["lif_steps"] = optional_series(s.lif_steps);
  json stages;
  for (std::size_t i = 0; i < kStageCount; ++i) stages[kStageNames[i]] = s.stage_totals_s[i];
  j["stage_totals_s"] = stages;
  j["config"] = s.config;
  return j.dump(2) + "\n";
}

RunSummary summary_from_json(const std::string& text) {
  const json j = json::parse(text);
  RunSummary s;
  s.config_hash = j.at("config_hash").get<std::string>();
  s.node_count = j.at("node_count").get<std::int64_t>();
  const auto& g = j.at("grid");
  s.grid = {g[0].get<std::int64_t>(), g[1].get<std::int64_t>(), g[2].get<std::int64_t>()};
  s.scheduler = j.at("scheduler").get<std::string>();
  s.total_time_s = j.at("total_time_s").get<double>();
  s.lockstep_work = j.at("lockstep_work").get<std::uint64_t>();
  s.total_steps = j.at("total_steps").get<std::uint64_t>();
  s.rounds = j.at("rounds").get<std::int64_t>();
  s.seeds = j.at("seeds").get<std::uint64_t>();
  s.terminated = j.at("terminated").get<std::uint64_t>();
  s.exited = j.at("exited").get<std::uint64_t>();
  s.lif_load = series_from(j.at("lif_load"));
  s.lif_steps = series_from(j.at("lif_steps"));
  for (std::size_t i = 0; i < kStageCount; ++i) s.stage_totals_s[i] = j.at("stage_totals_s").at(kStageNames[i]).get<double>();
  s.config = j.at("config").get<Settings>();
  return s;
}

RunSummary read_summary(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return summary_from_json(buffer.str());
}

std::optional<double> mean_lif(const std::vector<std::optional<double>>& series) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& v : series)
    if (v) {
      sum += *v;
      ++count;
    }
  if (count == 0) return std::nullopt;
  return sum / static_cast<double>(count);
}

RunSummary summarize(const RunConfig& config, const RunResult& result) {
  RunSummary s;
  s.config_hash = config_hash(config);
  const ProcessGrid grid = config.process_grid();
  s.node_count = grid.rank_count();
  s.grid = grid.dims;
  s.scheduler = std::string(to_string(config.scheduler));
  s.total_time_s = lockstep_seconds(result.rounds);
  s.lockstep_work = lockstep_work(result.rounds);
  s.total_steps = result.total_steps;
  s.rounds = static_cast<std::int64_t>(result.rounds.size());
  s.seeds = result.seeds;
  if (!result.tallies.empty()) {
    s.terminated = result.tallies.back().terminated;
    s.exited = result.tallies.back().exited;
  }
  for (const auto& round : result.rounds) {
    s.lif_load.push_back(lif_from_loads(round));
    s.lif_steps.push_back(lif_from_steps(round));
  }
  s.stage_totals_s = stage_totals(result.rounds);
  s.config = to_settings(config);
  return s;
}

RunOutputs run_experiment(const RunConfig& config, bool write_files) {
  Simulation sim(make_setup(config));
  RunOutputs out{sim.run(), {}};
  out.summary = summarize(config, out.result);
  if (!write_files) return out;

  const std::filesystem::path dir(config.output);
  std::filesystem::create_directories(dir);
  write_rounds_csv(dir / "rounds.csv", out.result.rounds);
  write_lif_csv(dir / "lif.csv", out.result.rounds);
  {
    std::ofstream summary(dir / "summary.json", std::ios::binary);
    summary << summary_to_json(out.summary);
  }
  {
    std::ofstream provenance(dir / "config.txt", std::ios::binary);
    provenance << "# config " << out.summary.config_hash << "\n" << to_text(to_settings(config));
  }
  if (config.write_curves) write_lineset(dir / "curves.f64", out.result.curves, Precision::float64);
  return out;
}

void export_curves(const std::filesystem::path& run_dir, const std::filesystem::path& out) {
  const auto source = run_dir / "curves.f64";
  if (!std::filesystem::exists(source))
    throw std::runtime_error(source.string() + " not found (run with write_curves = true)");
  const auto curves = read_lineset(source);
  write_lineset(out, curves, Precision::float32);
}

std::string compare_table(const std::vector<RunSummary>& summaries) {
  std::ostringstream out;
  out << "scheduler,nodes,grid,aabb_scale,stride,total_time_s,lockstep_work,speedup_time,speedup_work\n";
  std::vector<std::string> order;
  for (const auto& s : summaries)
    if (std::find(order.begin(), order.end(), s.scheduler) == order.end()) order.push_back(s.scheduler);
  const auto setting = [](const RunSummary& s, const std::string& key) {
    auto it = s.config.find(key);
    return it == s.config.end() ? std::string() : it->second;
  };
  for (const auto& scheduler : order) {
    std::vector<const RunSummary*> group;
    for (const auto& s : summaries)
      if (s.scheduler == scheduler) group.push_back(&s);
    std::stable_sort(group.begin(), group.end(), [](const auto* a, const auto* b) { return a->node_count < b->node_count; });
    const RunSummary& base = *group.front();
    for (const auto* s : group) {
      const double speed_time = s->total_time_s > 0.0 ? base.total_time_s / s->total_time_s : 0.0;
      const double speed_work =
          s->lockstep_work > 0 ? static_cast<double>(base.lockstep_work) / static_cast<double>(s->lockstep_work) : 0.0;
      out << s->scheduler << ',' << s->node_count << ',' << triple_label(s->grid) << ',' << setting(*s, "aabb_scale")
          << ',' << '"' << setting(*s, "stride") << '"' << ',' << format_real(s->total_time_s) << ','
          << s->lockstep_work << ',' << format_real(speed_time) << ',' << format_real(speed_work) << '\n';
    }
  }
  return out.str();
}

SweepKind parse_sweep_kind(std::string_view token) {
  if (token == "strong") return SweepKind::strong;
  if (token == "weak") return SweepKind::weak;
  if (token == "balance") return SweepKind::balance;
  if (token == "param") return SweepKind::param;
  throw ConfigError("unknown sweep kind '" + std::string(token) + "' (expected strong|weak|balance|param)");
}

std::string_view to_string(SweepKind kind) {
  switch (kind) {
    case SweepKind::strong:
      return "strong";
    case SweepKind::weak:
      return "weak";
    case SweepKind::balance:
      return "balance";
    case SweepKind::param:
      return "param";
  }
  return "unknown";
}

std::vector<RunConfig> sweep_configs(SweepKind kind, const RunConfig& base, const SweepOptions& options) {
  const std::filesystem::path root = std::filesystem::path(base.output) / std::string(to_string(kind));
  std::vector<RunConfig> configs;
  const auto add = [&](RunConfig c, const std::string& label) {
    c.output = (root / label).string();
    validate(c);
    configs.push_back(std::move(c));
  };
  switch (kind) {
    case SweepKind::strong:
      for (SchedulerKind s : options.schedulers)
        for (std::int64_t n : options.node_counts) {
          RunConfig c = base;
          c.scheduler = s;
          c.grid.reset();
          c.nodes = n;
          add(c, std::string(to_string(s)) + "_n" + std::to_string(n));
        }
      break;
    case SweepKind::weak:
      if (options.weak_strides.size() != options.node_counts.size())
        throw ConfigError("weak sweep needs one stride per node count");
      for (SchedulerKind s : options.schedulers)
        for (std::size_t i = 0; i < options.node_counts.size(); ++i) {
          RunConfig c = base;
          c.scheduler = s;
          c.grid.reset();
          c.nodes = options.node_counts[i];
          c.stride = options.weak_strides[i];
          add(c, std::string(to_string(s)) + "_n" + std::to_string(c.nodes) + "_s" + triple_label(c.stride));
        }
      break;
    case SweepKind::balance:
      for (SchedulerKind s : options.schedulers) {
        RunConfig c = base;
        c.scheduler = s;
        c.aabb_scale = 0.5;
        add(c, std::string(to_string(s)));
      }
      break;
    case SweepKind::param: {
      if (options.param_values.empty()) throw ConfigError("param sweep needs at least one value");
      for (SchedulerKind s : options.schedulers)
        for (const auto& value : options.param_values) {
          Settings settings = to_settings(base);
          settings["scheduler"] = std::string(to_string(s));
          settings[options.param_key] = value;
          RunConfig c = make_config(settings);
          add(c, std::string(to_string(s)) + "_" + options.param_key + "-" + value);
        }
      break;
    }
  }
  return configs;
}

SweepResult run_sweep(SweepKind kind, const RunConfig& base, const SweepOptions& options) {
  const auto configs = sweep_configs(kind, base, options);
  SweepResult result;
  for (const auto& c : configs) result.summaries.push_back(run_experiment(c).summary);
  result.table = compare_table(result.summaries);
  const std::filesystem::path root = std::filesystem::path(base.output) / std::string(to_string(kind));
  std::filesystem::create_directories(root);
  std::ofstream(root / "speedup.csv", std::ios::binary) << result.table;
  return result;
}

}  // namespace padv
