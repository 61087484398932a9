#include "padvect/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "padvect/errors.hpp"

namespace padv {

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::runtime_error([&] {
        std::string joined = "invalid configuration:";
        for (const auto& p : problems) joined += "\n  - " + p;
        return joined;
      }()),
      problems_(std::move(problems)) {}

ProcessGrid RunConfig::process_grid() const { return grid ? make_grid(*grid) : most_cubic_grid(nodes); }

AnalyticField RunConfig::analytic_field() const {
  AnalyticField f = make_field(field);
  for (const auto& [k, v] : field_parameters) f.parameters[k] = v;
  return f;
}

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
std::optional<T> parse_number(std::string_view s) {
  s = trim(s);
  T value{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

std::optional<Int3> parse_triple(std::string_view s) {
  std::vector<std::int64_t> parts;
  std::size_t start = 0;
  while (true) {
    const auto comma = s.find(',', start);
    const auto v = parse_number<std::int64_t>(s.substr(start, comma == std::string_view::npos ? comma : comma - start));
    if (!v) return std::nullopt;
    parts.push_back(*v);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (parts.size() == 1) return uniform3(parts[0]);
  if (parts.size() == 3) return Int3{parts[0], parts[1], parts[2]};
  return std::nullopt;
}

std::string format_triple(const Int3& t) {
  return std::to_string(t.x) + "," + std::to_string(t.y) + "," + std::to_string(t.z);
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

const std::vector<std::string> kFieldParameterNames = {"A", "B", "C", "w0", "R0", "kappa"};

}  // namespace

std::pair<std::string, std::string> parse_assignment(std::string_view text) {
  const auto eq = text.find('=');
  if (eq == std::string_view::npos) throw ConfigError("expected key=value, got '" + std::string(text) + "'");
  const auto key = trim(text.substr(0, eq));
  if (key.empty()) throw ConfigError("empty key in '" + std::string(text) + "'");
  return {std::string(key), std::string(trim(text.substr(eq + 1)))};
}

Settings parse_settings(std::string_view text) {
  Settings settings;
  std::vector<std::string> problems;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = text.find('\n', start);
    std::string_view line = text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (!line.empty()) {
      try {
        auto [k, v] = parse_assignment(line);
        settings[k] = v;
      } catch (const ConfigError&) {
        problems.push_back("line " + std::to_string(line_no) + ": expected 'key = value'");
      }
    }
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  if (!problems.empty()) throw ConfigError(std::move(problems));
  return settings;
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k{"field"};
    for (const auto& name : kFieldParameterNames) k.push_back("field." + std::string(name));
    for (const char* key : {"resolution", "grid", "nodes", "scheduler", "dimensions", "alpha", "aabb_scale", "stride",
                            "step", "max_iterations", "particles_per_round", "workers", "round_cap", "write_curves", "output"})
      k.emplace_back(key);
    return k;
  }();
  return keys;
}

Settings read_settings_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_settings(buffer.str());
}

RunConfig make_config(const Settings& settings) {
  RunConfig c;
  std::vector<std::string> problems;
  const auto bad = [&](const std::string& key, const std::string& value, const char* expected) {
    problems.push_back(key + " = '" + value + "': expected " + expected);
  };
  for (const auto& [key, value] : settings) {
    if (key == "field") {
      try {
        c.field = parse_field_kind(value);
      } catch (const ConfigError& e) {
        problems.push_back(e.what());
      }
    } else if (key.rfind("field.", 0) == 0) {
      const std::string name = key.substr(6);
      const auto v = parse_number<double>(value);
      if (std::find(kFieldParameterNames.begin(), kFieldParameterNames.end(), name) == kFieldParameterNames.end())
        problems.push_back("unknown field parameter '" + name + "'");
      else if (!v)
        bad(key, value, "a real number");
      else
        c.field_parameters[name] = *v;
    } else if (key == "resolution") {
      if (auto t = parse_triple(value)) c.resolution = *t; else bad(key, value, "n or nx,ny,nz");
    } else if (key == "grid") {
      if (value == "auto" || value.empty()) c.grid.reset();
      else if (auto t = parse_triple(value)) c.grid = *t;
      else bad(key, value, "gx,gy,gz or auto");
    } else if (key == "nodes") {
      if (auto v = parse_number<std::int64_t>(value)) c.nodes = *v; else bad(key, value, "an integer");
    } else if (key == "scheduler") {
      try {
        c.scheduler = parse_scheduler(value);
      } catch (const ConfigError& e) {
        problems.push_back(e.what());
      }
    } else if (key == "dimensions") {
      if (auto v = parse_number<int>(value)) c.dimensions = *v; else bad(key, value, "an integer");
    } else if (key == "alpha") {
      if (value == "auto" || value.empty()) c.alpha.reset();
      else if (auto v = parse_number<double>(value)) c.alpha = *v;
      else bad(key, value, "a real number or auto");
    } else if (key == "aabb_scale") {
      if (auto v = parse_number<double>(value)) c.aabb_scale = *v; else bad(key, value, "a real number");
    } else if (key == "stride") {
      if (auto t = parse_triple(value)) c.stride = *t; else bad(key, value, "s or sx,sy,sz");
    } else if (key == "step") {
      if (auto v = parse_number<double>(value)) c.step = *v; else bad(key, value, "a real number");
    } else if (key == "max_iterations") {
      if (auto v = parse_number<std::int32_t>(value)) c.max_iterations = *v; else bad(key, value, "an integer");
    } else if (key == "particles_per_round") {
      if (auto v = parse_number<std::size_t>(value)) c.particles_per_round = *v; else bad(key, value, "an integer");
    } else if (key == "workers") {
      if (auto v = parse_number<int>(value)) c.workers = *v; else bad(key, value, "an integer");
    } else if (key == "round_cap") {
      if (auto v = parse_number<std::int64_t>(value)) c.round_cap = *v; else bad(key, value, "an integer");
    } else if (key == "write_curves") {
      if (value == "true" || value == "1") c.write_curves = true;
      else if (value == "false" || value == "0") c.write_curves = false;
      else bad(key, value, "true or false");
    } else if (key == "output") {
      c.output = value;
    } else {
      problems.push_back("unknown key '" + key + "'");
    }
  }
  try {
    validate(c);
  } catch (const ConfigError& e) {
    for (const auto& p : e.problems()) problems.push_back(p);
  }
  if (!problems.empty()) throw ConfigError(std::move(problems));
  return c;
}

void validate(const RunConfig& c) {
  std::vector<std::string> problems;
  for (int a = 0; a < 3; ++a) {
    if (c.resolution[a] < 2) problems.push_back("resolution must be >= 2 on every axis");
    if (c.stride[a] < 1) problems.push_back("stride must be a positive integer triple");
  }
  Int3 dims{};
  if (c.grid) {
    dims = *c.grid;
    if (dims.x < 1 || dims.y < 1 || dims.z < 1) problems.push_back("grid dims must be >= 1");
  } else if (c.nodes < 1) {
    problems.push_back("nodes must be >= 1");
  } else {
    dims = most_cubic_grid(c.nodes).dims;
  }
  for (int a = 0; a < 3; ++a)
    if (dims[a] >= 1 && c.resolution[a] < dims[a]) problems.push_back("resolution smaller than the process grid");
  if (!(c.aabb_scale > 0.0) || c.aabb_scale > 1.0) problems.push_back("aabb_scale must lie in (0, 1]");
  if (!(c.step > 0.0)) problems.push_back("step must be positive");
  if (c.max_iterations < 0) problems.push_back("max_iterations must be >= 0");
  if (c.particles_per_round < 1) problems.push_back("particles_per_round must be >= 1");
  if (c.dimensions < 1) problems.push_back("dimensions must be >= 1");
  if (c.alpha && !(*c.alpha >= 0.0 && *c.alpha <= 1.0)) problems.push_back("alpha must lie in [0, 1]");
  if (c.workers < 1) problems.push_back("workers must be >= 1");
  if (c.round_cap < 1) problems.push_back("round_cap must be >= 1");
  if (c.output.empty()) problems.push_back("output must not be empty");
  const auto defaults = make_field(c.field).parameters;
  for (const auto& [name, value] : c.field_parameters)
    if (!defaults.contains(name))
      problems.push_back("field parameter '" + name + "' does not apply to field " + std::string(to_string(c.field)));
  if (!problems.empty()) {
    std::sort(problems.begin(), problems.end());
    problems.erase(std::unique(problems.begin(), problems.end()), problems.end());
    throw ConfigError(std::move(problems));
  }
}

Settings to_settings(const RunConfig& c) {
  Settings s;
  s["field"] = std::string(to_string(c.field));
  for (const auto& [k, v] : c.field_parameters) s["field." + k] = format_double(v);
  s["resolution"] = format_triple(c.resolution);
  s["grid"] = c.grid ? format_triple(*c.grid) : "auto";
  s["nodes"] = std::to_string(c.nodes);
  s["scheduler"] = std::string(to_string(c.scheduler));
  s["dimensions"] = std::to_string(c.dimensions);
  s["alpha"] = c.alpha ? format_double(*c.alpha) : "auto";
  s["aabb_scale"] = format_double(c.aabb_scale);
  s["stride"] = format_triple(c.stride);
  s["step"] = format_double(c.step);
  s["max_iterations"] = std::to_string(c.max_iterations);
  s["particles_per_round"] = std::to_string(c.particles_per_round);
  s["workers"] = std::to_string(c.workers);
  s["round_cap"] = std::to_string(c.round_cap);
  s["write_curves"] = c.write_curves ? "true" : "false";
  s["output"] = c.output;
  return s;
}

std::string to_text(const Settings& settings) {
  std::string text;
  for (const auto& [k, v] : settings) text += k + " = " + v + "\n";
  return text;
}

std::string config_hash(const RunConfig& config) {
  Settings s = to_settings(config);
  s.erase("output");
  s.erase("workers");
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : to_text(s)) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

SimulationSetup make_setup(const RunConfig& c) {
  validate(c);
  SimulationSetup setup;
  setup.field = as_function(c.analytic_field());
  setup.resolution = c.resolution;
  setup.grid = c.process_grid();
  setup.scheduler = c.scheduler;
  setup.balance = BalanceOptions{c.dimensions, c.alpha};
  setup.step = c.step;
  setup.max_iterations = c.max_iterations;
  setup.particles_per_round = c.particles_per_round;
  setup.seeds = SeedSpec{c.aabb_scale, c.stride};
  setup.workers = c.workers;
  setup.record_curves = c.write_curves;
  setup.round_cap = c.round_cap;
  return setup;
}

}  // namespace padv
