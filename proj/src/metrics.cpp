#include "padvect/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace padv {

std::optional<double> lif(std::span<const double> loads) {
  if (loads.empty()) return std::nullopt;
  const double total = std::accumulate(loads.begin(), loads.end(), 0.0);
  if (total <= 0.0) return std::nullopt;
  const double mean = total / static_cast<double>(loads.size());
  return *std::max_element(loads.begin(), loads.end()) / mean;
}

std::optional<double> lif(std::span<const std::uint64_t> loads) {
  std::vector<double> as_real(loads.begin(), loads.end());
  return lif(std::span<const double>(as_real));
}

std::optional<double> lif_from_steps(std::span<const RoundRecord> round) {
  std::vector<std::uint64_t> steps;
  for (const auto& r : round) steps.push_back(r.integrate_steps);
  return lif(std::span<const std::uint64_t>(steps));
}

std::optional<double> lif_from_loads(std::span<const RoundRecord> round) {
  std::vector<std::uint64_t> loads;
  for (const auto& r : round) loads.push_back(r.load_post);
  return lif(std::span<const std::uint64_t>(loads));
}

std::map<std::int64_t, double> speedup(const std::map<std::int64_t, double>& times) {
  if (times.size() < 2) throw std::invalid_argument("speedup needs at least two node counts");
  const double baseline = times.begin()->second;
  if (!(baseline > 0.0)) throw std::invalid_argument("speedup baseline time must be positive");
  std::map<std::int64_t, double> result;
  for (const auto& [nodes, t] : times) {
    if (!(t > 0.0)) throw std::invalid_argument("speedup times must be positive");
    result[nodes] = baseline / t;
  }
  return result;
}

void assign_idle(std::span<RoundRecord> round) {
  double longest = 0.0;
  for (const auto& r : round) longest = std::max(longest, r.stage(Stage::integrate));
  for (auto& r : round) r.idle_seconds = longest - r.stage(Stage::integrate);
}

double lockstep_seconds(std::span<const std::vector<RoundRecord>> rounds) {
  double total = 0.0;
  for (const auto& round : rounds) {
    double longest = 0.0;
    for (const auto& r : round)
      longest = std::max(longest, std::accumulate(r.stage_seconds.begin(), r.stage_seconds.end(), 0.0));
    total += longest;
  }
  return total;
}

std::uint64_t lockstep_work(std::span<const std::vector<RoundRecord>> rounds) {
  std::uint64_t total = 0;
  for (const auto& round : rounds) {
    std::uint64_t longest = 0;
    for (const auto& r : round) longest = std::max(longest, r.integrate_steps);
    total += longest;
  }
  return total;
}

std::array<double, kStageCount> stage_totals(std::span<const std::vector<RoundRecord>> rounds) {
  std::array<double, kStageCount> totals{};
  for (const auto& round : rounds)
    for (std::size_t s = 0; s < kStageCount; ++s) {
      double longest = 0.0;
      for (const auto& r : round) longest = std::max(longest, r.stage_seconds[s]);
      totals[s] += longest;
    }
  return totals;
}

std::string format_real(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9e", value);
  return buf;
}

namespace {

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return out;
}

}  // namespace

void write_rounds_csv(const std::filesystem::path& path, std::span<const std::vector<RoundRecord>> rounds) {
  auto out = open_output(path);
  out << "round,rank,stage_lb_distribute_s,stage_round_info_s,stage_alloc_s,stage_integrate_s,stage_collect_s,"
         "stage_oob_s,idle_s,integrate_steps,load_pre,load_post,sent_balanced,recv_balanced,sent_oob,recv_oob\n";
  for (const auto& round : rounds)
    for (const auto& r : round) {
      out << r.round << ',' << r.rank;
      for (double s : r.stage_seconds) out << ',' << format_real(s);
      out << ',' << format_real(r.idle_seconds) << ',' << r.integrate_steps << ',' << r.load_pre << ',' << r.load_post
          << ',' << r.sent_balanced << ',' << r.recv_balanced << ',' << r.sent_oob << ',' << r.recv_oob << '\n';
    }
}

void write_lif_csv(const std::filesystem::path& path, std::span<const std::vector<RoundRecord>> rounds) {
  auto out = open_output(path);
  out << "round,lif_load,lif_steps\n";
  const auto cell = [](std::optional<double> v) { return v ? format_real(*v) : std::string("NA"); };
  for (const auto& round : rounds) {
    if (round.empty()) continue;
    out << round.front().round << ',' << cell(lif_from_loads(round)) << ',' << cell(lif_from_steps(round)) << '\n';
  }
}

}  // namespace padv
