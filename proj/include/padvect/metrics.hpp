#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace padv {

enum class Stage : int { lb_distribute = 0, round_info, alloc, integrate, collect, oob };
inline constexpr std::size_t kStageCount = 6;

/// Per-rank accounting of one round.
struct RoundRecord {
  std::int64_t round = 0;
  int rank = 0;
  std::array<double, kStageCount> stage_seconds{};
  double idle_seconds = 0.0;  // round max integrate time minus own integrate time
  std::uint64_t integrate_steps = 0;
  std::uint64_t load_pre = 0;
  std::uint64_t load_post = 0;
  std::uint64_t sent_balanced = 0;
  std::uint64_t recv_balanced = 0;
  std::uint64_t sent_oob = 0;
  std::uint64_t recv_oob = 0;

  double& stage(Stage s) { return stage_seconds[static_cast<std::size_t>(s)]; }
  double stage(Stage s) const { return stage_seconds[static_cast<std::size_t>(s)]; }
};

/// max/mean; nothing when every load is zero (or the list is empty).
std::optional<double> lif(std::span<const double> loads);
std::optional<double> lif(std::span<const std::uint64_t> loads);

/// Work-unit LIF over the integrate steps of one round's records.
std::optional<double> lif_from_steps(std::span<const RoundRecord> round);
std::optional<double> lif_from_loads(std::span<const RoundRecord> round);

/// S(N) = T(N_min) / T(N). Throws std::invalid_argument with fewer than two entries or a
/// non-positive time.
std::map<std::int64_t, double> speedup(const std::map<std::int64_t, double>& times);

/// Fills idle_seconds of one round from the integrate stage times.
void assign_idle(std::span<RoundRecord> round);

/// Lockstep simulated time of a run: sum over rounds of the per-round max of each rank's stage sum.
double lockstep_seconds(std::span<const std::vector<RoundRecord>> rounds);
/// Sum over rounds of the per-round max integrate work units.
std::uint64_t lockstep_work(std::span<const std::vector<RoundRecord>> rounds);
/// Per-stage lockstep totals (sum over rounds of the per-round max of that stage).
std::array<double, kStageCount> stage_totals(std::span<const std::vector<RoundRecord>> rounds);

std::string format_real(double value);  // "%.9e"

void write_rounds_csv(const std::filesystem::path& path, std::span<const std::vector<RoundRecord>> rounds);
void write_lif_csv(const std::filesystem::path& path, std::span<const std::vector<RoundRecord>> rounds);

}  // namespace padv
