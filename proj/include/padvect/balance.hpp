#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "padvect/advect.hpp"

namespace padv {

using Load = std::uint64_t;

/// Active-particle counts of a rank and of its face neighbors (neighborhood order).
struct LoadVector {
  Load local = 0;
  std::vector<Load> per_neighbor;
};

struct BalanceDecision {
  std::vector<Load> outgoing;  // per neighbor, neighborhood order
  Load retained = 0;

  friend bool operator==(const BalanceDecision&, const BalanceDecision&) = default;
};

enum class SchedulerKind { none, constant, lma, gllma };

std::string_view to_string(SchedulerKind kind);
SchedulerKind parse_scheduler(std::string_view token);

struct BalanceOptions {
  int dimensions = 3;                 // grid dimensionality for the constant diffusion parameter
  std::optional<double> alpha;        // overrides 1 - 2/(dimensions+1) when set
};

BalanceDecision balance_none(const LoadVector& lv);

/// Fixed-parameter diffusion: floor(alpha * (local - load_j)) to every lesser neighbor, scaled down
/// (largest remainder) when the demand exceeds the local load.
BalanceDecision balance_constant(const LoadVector& lv, const BalanceOptions& options = {});

/// Result of the iteratively pruned mean shared by LMA and the quota phase of GL-LMA.
struct MeanTrace {
  Load mean = 0;
  std::vector<bool> contributors;
  int iterations = 0;
};

/// Mean over the local load and neighbors strictly below it, pruned while a contributor is above.
MeanTrace lesser_mean(const LoadVector& lv);
/// Mean over the local load and neighbors strictly above it, pruned while a contributor is below.
MeanTrace greater_mean(const LoadVector& lv);

BalanceDecision balance_lma(const LoadVector& lv);

/// Quotas this rank offers each greater-loaded neighbor (how many particles it accepts from them).
std::vector<Load> quota_offer(const LoadVector& lv);

/// LMA capped pairwise by the quotas granted to this rank by each neighbor.
BalanceDecision balance_gllma(const LoadVector& lv, const std::vector<Load>& granted_quotas);

/// Dispatch for schedulers that need no quota exchange; gllma requires `granted_quotas`.
BalanceDecision decide(SchedulerKind kind, const LoadVector& lv, const BalanceOptions& options,
                       const std::vector<Load>* granted_quotas = nullptr);

/// Splits `total` over `weights` proportionally with largest-remainder rounding (ties to the lower
/// index). Sum of the result is exactly `total` when any weight is positive.
std::vector<Load> apportion(const std::vector<Load>& weights, Load total);

/// Removes the particles to transfer from the tail of `queue` and returns them per neighbor.
/// Only home particles not on loan are eligible; demand beyond the eligible count is cut back
/// proportionally. Selected particles are marked as on loan from `self_rank`.
std::vector<std::vector<Particle>> select_particles(std::vector<Particle>& queue, const BalanceDecision& decision,
                                                    int self_rank);

}  // namespace padv
