#include "padvect/balance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "padvect/errors.hpp"

namespace padv {

std::string_view to_string(SchedulerKind kind) {
  switch (kind) {
    case SchedulerKind::none:
      return "none";
    case SchedulerKind::constant:
      return "constant";
    case SchedulerKind::lma:
      return "lma";
    case SchedulerKind::gllma:
      return "gllma";
  }
  return "unknown";
}

SchedulerKind parse_scheduler(std::string_view token) {
  if (token == "none") return SchedulerKind::none;
  if (token == "constant") return SchedulerKind::constant;
  if (token == "lma") return SchedulerKind::lma;
  if (token == "gllma") return SchedulerKind::gllma;
  throw ConfigError("unknown scheduler '" + std::string(token) + "' (expected none|constant|lma|gllma)");
}

namespace {

BalanceDecision finish(const LoadVector& lv, std::vector<Load> outgoing) {
  const Load sent = std::accumulate(outgoing.begin(), outgoing.end(), Load{0});
  if (sent > lv.local) throw InvariantViolation("scheduler sends more particles than the local load");
  return {std::move(outgoing), lv.local - sent};
}

}  // namespace

BalanceDecision balance_none(const LoadVector& lv) {
  return {std::vector<Load>(lv.per_neighbor.size(), 0), lv.local};
}

std::vector<Load> apportion(const std::vector<Load>& weights, Load total) {
  std::vector<Load> shares(weights.size(), 0);
  const Load weight_sum = std::accumulate(weights.begin(), weights.end(), Load{0});
  if (weight_sum == 0) return shares;
  std::vector<std::pair<unsigned __int128, std::size_t>> remainders;
  Load assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const unsigned __int128 scaled = static_cast<unsigned __int128>(weights[i]) * total;
    shares[i] = static_cast<Load>(scaled / weight_sum);
    assigned += shares[i];
    remainders.emplace_back(scaled % weight_sum, i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < total && k < remainders.size(); ++k) {
    if (weights[remainders[k].second] == 0) continue;
    ++shares[remainders[k].second];
    ++assigned;
  }
  return shares;
}

BalanceDecision balance_constant(const LoadVector& lv, const BalanceOptions& options) {
  std::vector<Load> send(lv.per_neighbor.size(), 0);
  for (std::size_t j = 0; j < send.size(); ++j) {
    if (lv.per_neighbor[j] >= lv.local) continue;
    const Load diff = lv.local - lv.per_neighbor[j];
    if (options.alpha) {
      send[j] = static_cast<Load>(std::floor(*options.alpha * static_cast<double>(diff)));
    } else {
      // alpha = 1 - 2/(d+1) = (d-1)/(d+1), kept rational so the floor is exact.
      const auto d = static_cast<Load>(options.dimensions);
      send[j] = diff * (d - 1) / (d + 1);
    }
  }
  const Load demand = std::accumulate(send.begin(), send.end(), Load{0});
  if (demand > lv.local) send = apportion(send, lv.local);
  return finish(lv, std::move(send));
}

MeanTrace lesser_mean(const LoadVector& lv) {
  const std::size_t n = lv.per_neighbor.size();
  MeanTrace t{lv.local, std::vector<bool>(n, false), 0};
  bool above;
  do {
    std::fill(t.contributors.begin(), t.contributors.end(), false);
    Load sum = lv.local;
    Load count = 1;
    for (std::size_t i = 0; i < n; ++i) {
      if (lv.per_neighbor[i] < t.mean) {
        t.contributors[i] = true;
        sum += lv.per_neighbor[i];
        ++count;
      }
    }
    t.mean = sum / count;
    ++t.iterations;
    above = false;
    for (std::size_t i = 0; i < n; ++i) above = above || (t.contributors[i] && lv.per_neighbor[i] > t.mean);
  } while (above);
  return t;
}

MeanTrace greater_mean(const LoadVector& lv) {
  const std::size_t n = lv.per_neighbor.size();
  MeanTrace t{lv.local, std::vector<bool>(n, false), 0};
  bool below;
  do {
    std::fill(t.contributors.begin(), t.contributors.end(), false);
    Load sum = lv.local;
    Load count = 1;
    for (std::size_t i = 0; i < n; ++i) {
      if (lv.per_neighbor[i] > t.mean) {
        t.contributors[i] = true;
        sum += lv.per_neighbor[i];
        ++count;
      }
    }
    t.mean = sum / count;
    ++t.iterations;
    below = false;
    for (std::size_t i = 0; i < n; ++i) below = below || (t.contributors[i] && lv.per_neighbor[i] < t.mean);
  } while (below);
  return t;
}

BalanceDecision balance_lma(const LoadVector& lv) {
  const MeanTrace t = lesser_mean(lv);
  std::vector<Load> outgoing(lv.per_neighbor.size(), 0);
  for (std::size_t i = 0; i < outgoing.size(); ++i)
    if (t.contributors[i]) outgoing[i] = t.mean - lv.per_neighbor[i];
  return finish(lv, std::move(outgoing));
}

std::vector<Load> quota_offer(const LoadVector& lv) {
  const MeanTrace t = greater_mean(lv);
  std::vector<Load> quotas(lv.per_neighbor.size(), 0);
  const Load total_quota = t.mean - lv.local;
  Load contributed = 0;
  for (std::size_t i = 0; i < quotas.size(); ++i)
    if (t.contributors[i]) contributed += lv.per_neighbor[i];
  if (contributed == 0) return quotas;
  for (std::size_t i = 0; i < quotas.size(); ++i) {
    if (!t.contributors[i]) continue;
    quotas[i] = static_cast<Load>(static_cast<unsigned __int128>(total_quota) * lv.per_neighbor[i] / contributed);
  }
  return quotas;
}

BalanceDecision balance_gllma(const LoadVector& lv, const std::vector<Load>& granted_quotas) {
  if (granted_quotas.size() != lv.per_neighbor.size())
    throw InvariantViolation("balance_gllma: quota vector does not match the neighborhood");
  BalanceDecision lma = balance_lma(lv);
  for (std::size_t i = 0; i < lma.outgoing.size(); ++i) lma.outgoing[i] = std::min(lma.outgoing[i], granted_quotas[i]);
  return finish(lv, std::move(lma.outgoing));
}

BalanceDecision decide(SchedulerKind kind, const LoadVector& lv, const BalanceOptions& options,
                       const std::vector<Load>* granted_quotas) {
  switch (kind) {
    case SchedulerKind::none:
      return balance_none(lv);
    case SchedulerKind::constant:
      return balance_constant(lv, options);
    case SchedulerKind::lma:
      return balance_lma(lv);
    case SchedulerKind::gllma:
      if (!granted_quotas) throw InvariantViolation("gllma decision requires granted quotas");
      return balance_gllma(lv, *granted_quotas);
  }
  throw InvariantViolation("unknown scheduler");
}

std::vector<std::vector<Particle>> select_particles(std::vector<Particle>& queue, const BalanceDecision& decision,
                                                    int self_rank) {
  std::vector<std::vector<Particle>> lists(decision.outgoing.size());
  const Load demanded = std::accumulate(decision.outgoing.begin(), decision.outgoing.end(), Load{0});
  if (demanded == 0) return lists;

  // Eligible particles, scanning from the tail (most recent arrivals first).
  std::vector<std::size_t> eligible;
  for (std::size_t i = queue.size(); i-- > 0 && eligible.size() < demanded;)
    if (queue[i].home_rank == self_rank && !queue[i].balanced_from) eligible.push_back(i);
  std::reverse(eligible.begin(), eligible.end());

  const std::vector<Load> counts =
      eligible.size() < demanded ? apportion(decision.outgoing, eligible.size()) : decision.outgoing;

  std::size_t cursor = 0;
  for (std::size_t j = 0; j < counts.size(); ++j) {
    for (Load c = 0; c < counts[j]; ++c) {
      Particle p = queue[eligible[cursor++]];
      p.balanced_from = self_rank;
      lists[j].push_back(p);
    }
  }
  std::vector<bool> taken(queue.size(), false);
  for (std::size_t k = 0; k < cursor; ++k) taken[eligible[k]] = true;
  std::size_t write = 0;
  for (std::size_t i = 0; i < queue.size(); ++i)
    if (!taken[i]) queue[write++] = queue[i];
  queue.resize(write);
  return lists;
}

}  // namespace padv
