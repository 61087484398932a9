#include "padvect/balance.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "padvect/topology.hpp"

namespace padv {
namespace {

Load sum(const std::vector<Load>& v) { return std::accumulate(v.begin(), v.end(), Load{0}); }

LoadVector random_load_vector(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> count(0, 6);
  std::uniform_int_distribution<Load> load(0, 1'000'000);
  LoadVector lv{load(rng), {}};
  const int n = count(rng);
  for (int i = 0; i < n; ++i) lv.per_neighbor.push_back(load(rng));
  // Bias some cases toward ties and small values, where floor effects show up.
  if (rng() % 4 == 0) {
    std::uniform_int_distribution<Load> small(0, 20);
    lv.local = small(rng);
    for (auto& l : lv.per_neighbor) l = small(rng);
  }
  return lv;
}

Particle home(std::uint64_t id, int rank) { return Particle{id, {0.5, 0.5, 0.5}, 1000, rank, std::nullopt}; }

TEST(BalanceNone, SendsNothing) {
  EXPECT_EQ(balance_none({100, {5, 5}}), (BalanceDecision{{0, 0}, 100}));
  EXPECT_EQ(balance_none({0, {}}), (BalanceDecision{{}, 0}));
}

TEST(BalanceConstant, HalfTheDifferenceToALesserNeighbor) {
  EXPECT_EQ(balance_constant({100, {40}}), (BalanceDecision{{30}, 70}));
}

TEST(BalanceConstant, OverdrawIsScaledDownToLocalLoad) {
  // Naive demand 6 * 30 = 180 > 60.
  EXPECT_EQ(balance_constant({60, {0, 0, 0, 0, 0, 0}}), (BalanceDecision{{10, 10, 10, 10, 10, 10}, 0}));
}

TEST(BalanceConstant, EqualOrGreaterNeighborsReceiveNothing) {
  EXPECT_EQ(balance_constant({50, {50, 80}}), (BalanceDecision{{0, 0}, 50}));
}

TEST(BalanceConstant, AlphaFollowsDimensionality) {
  // d = 2 -> alpha = 1/3.
  EXPECT_EQ(balance_constant({100, {10}}, {2, std::nullopt}).outgoing, std::vector<Load>{30});
  EXPECT_EQ(balance_constant({100, {10}}, {3, 0.25}).outgoing, std::vector<Load>{22});
}

TEST(BalanceLma, HandTraceSingleIteration) {
  const auto d = balance_lma({100, {40, 60, 200}});
  EXPECT_EQ(d.outgoing, (std::vector<Load>{26, 6, 0}));
  EXPECT_EQ(d.retained, 68u);
}

TEST(BalanceLma, HandTraceTwoIterations) {
  const auto t = lesser_mean({100, {10, 90}});
  EXPECT_EQ(t.iterations, 2);
  EXPECT_EQ(t.mean, 55u);
  EXPECT_EQ(balance_lma({100, {10, 90}}).outgoing, (std::vector<Load>{45, 0}));
}

TEST(BalanceLma, NoStrictlyLesserNeighbor) {
  EXPECT_EQ(balance_lma({50, {50, 50}}), (BalanceDecision{{0, 0}, 50}));
}

TEST(QuotaOffer, OverBalancingScenario) {
  const LoadVector lv{10, {100, 100, 100, 100}};
  EXPECT_EQ(greater_mean(lv).mean, 82u);
  EXPECT_EQ(quota_offer(lv), (std::vector<Load>{18, 18, 18, 18}));
}

TEST(QuotaOffer, ChainMiddleRank) {
  EXPECT_EQ(quota_offer({40, {100, 160}}), (std::vector<Load>{23, 36}));
}

TEST(QuotaOffer, NoGreaterNeighbor) { EXPECT_EQ(quota_offer({50, {50, 40}}), (std::vector<Load>{0, 0})); }

TEST(BalanceGllma, ChainOfThree) {
  // Loads (100, 40, 160) on a 1D chain; the middle rank grants 23 to the left and 36 to the right.
  const auto offers = quota_offer({40, {100, 160}});
  const auto left = balance_gllma({100, {40}}, {offers[0]});
  const auto right = balance_gllma({160, {40}}, {offers[1]});
  const auto middle = balance_gllma({40, {100, 160}}, {quota_offer({100, {40}})[0], quota_offer({160, {40}})[0]});
  EXPECT_EQ(left.outgoing, std::vector<Load>{23});
  EXPECT_EQ(right.outgoing, std::vector<Load>{36});
  EXPECT_EQ(middle.outgoing, (std::vector<Load>{0, 0}));
  EXPECT_EQ(40 + left.outgoing[0] + right.outgoing[0], 99u);
}

TEST(BalanceGllma, QuotaSizeMismatchIsAnInvariantViolation) {
  EXPECT_THROW(balance_gllma({10, {1, 2}}, {1}), std::logic_error);
}

TEST(BalanceProperties, ConservationForEveryScheduler) {
  std::mt19937_64 rng(20240601);
  for (int trial = 0; trial < 1000; ++trial) {
    const LoadVector lv = random_load_vector(rng);
    std::vector<Load> granted(lv.per_neighbor.size());
    for (auto& g : granted) g = rng() % 1'000'000;
    for (const auto& d : {balance_none(lv), balance_constant(lv), balance_lma(lv), balance_gllma(lv, granted)}) {
      ASSERT_EQ(sum(d.outgoing) + d.retained, lv.local);
      ASSERT_EQ(d.outgoing.size(), lv.per_neighbor.size());
    }
  }
}

TEST(BalanceProperties, LmaOnlyFeedsLesserNeighborsAndRetainedIsBounded) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 1000; ++trial) {
    const LoadVector lv = random_load_vector(rng);
    const MeanTrace t = lesser_mean(lv);
    const auto d = balance_lma(lv);
    const Load contributors = static_cast<Load>(std::count(t.contributors.begin(), t.contributors.end(), true));
    ASSERT_LE(t.iterations, static_cast<int>(lv.per_neighbor.size()) + 1);
    ASSERT_GE(d.retained, t.mean);
    ASSERT_LE(d.retained, t.mean + 1 + contributors);
    for (std::size_t j = 0; j < lv.per_neighbor.size(); ++j) {
      if (lv.per_neighbor[j] >= lv.local) ASSERT_EQ(d.outgoing[j], 0u);
      if (t.contributors[j]) ASSERT_LE(lv.per_neighbor[j] + d.outgoing[j], d.retained);
    }
  }
}

TEST(BalanceProperties, QuotasNeverExceedTotalQuota) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 1000; ++trial) {
    const LoadVector lv = random_load_vector(rng);
    const MeanTrace t = greater_mean(lv);
    ASSERT_GE(t.mean, lv.local);
    ASSERT_LE(sum(quota_offer(lv)), t.mean - lv.local);
    ASSERT_LE(t.iterations, static_cast<int>(lv.per_neighbor.size()) + 1);
  }
}

TEST(BalanceProperties, SchedulersArePure) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const LoadVector lv = random_load_vector(rng);
    EXPECT_EQ(balance_lma(lv), balance_lma(lv));
    EXPECT_EQ(quota_offer(lv), quota_offer(lv));
    EXPECT_EQ(balance_constant(lv), balance_constant(lv));
  }
}

// One synchronous balancing step over a whole grid, exchanging counts only.
std::vector<Load> synchronous_step(const ProcessGrid& grid, const std::vector<Load>& loads, SchedulerKind kind) {
  const int n = static_cast<int>(grid.rank_count());
  std::vector<Neighborhood> hoods;
  std::vector<LoadVector> lvs;
  for (int r = 0; r < n; ++r) {
    hoods.push_back(neighborhood_of(grid, r));
    LoadVector lv{loads[r], {}};
    for (const auto& [d, nr] : hoods.back().neighbors) lv.per_neighbor.push_back(loads[nr]);
    lvs.push_back(lv);
  }
  std::vector<std::vector<Load>> offers;
  for (int r = 0; r < n; ++r) offers.push_back(quota_offer(lvs[r]));
  std::vector<Load> next = loads;
  for (int r = 0; r < n; ++r) {
    std::vector<Load> granted;
    for (const auto& [d, nr] : hoods[r].neighbors) granted.push_back(offers[nr][*hoods[nr].index_of(r)]);
    const auto decision = decide(kind, lvs[r], {}, &granted);
    for (std::size_t i = 0; i < decision.outgoing.size(); ++i) {
      next[r] -= decision.outgoing[i];
      next[hoods[r].neighbors[i].second] += decision.outgoing[i];
    }
  }
  return next;
}

TEST(BalanceProperties, GllmaNeverRaisesTheGlobalMaximum) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 300; ++trial) {
    const ProcessGrid grid{{static_cast<std::int64_t>(1 + rng() % 4), static_cast<std::int64_t>(1 + rng() % 4),
                            static_cast<std::int64_t>(1 + rng() % 4)}};
    std::vector<Load> loads(static_cast<std::size_t>(grid.rank_count()));
    for (auto& l : loads) l = rng() % 3 == 0 ? 0 : rng() % 100'000;
    const auto next = synchronous_step(grid, loads, SchedulerKind::gllma);
    ASSERT_LE(*std::max_element(next.begin(), next.end()), *std::max_element(loads.begin(), loads.end()));
    ASSERT_EQ(sum(next), sum(loads));
  }
}

TEST(BalanceProperties, LmaCanOverBalance) {
  // 3x3 plane: center starved, every other rank at 1000.
  const ProcessGrid grid{{3, 3, 1}};
  std::vector<Load> loads(9, 1000);
  loads[static_cast<std::size_t>(coords_to_rank(grid, {1, 1, 0}))] = 0;
  const auto lma = synchronous_step(grid, loads, SchedulerKind::lma);
  const auto gllma = synchronous_step(grid, loads, SchedulerKind::gllma);
  EXPECT_GT(*std::max_element(lma.begin(), lma.end()), 1000u);
  EXPECT_LE(*std::max_element(gllma.begin(), gllma.end()), 1000u);
}

TEST(Apportion, LargestRemainder) {
  EXPECT_EQ(apportion({26, 6}, 10), (std::vector<Load>{8, 2}));
  EXPECT_EQ(apportion({1, 1, 1}, 2), (std::vector<Load>{1, 1, 0}));
  EXPECT_EQ(apportion({0, 0}, 5), (std::vector<Load>{0, 0}));
  EXPECT_EQ(sum(apportion({30, 30, 30, 30, 30, 30}, 60)), 60u);
}

TEST(SelectParticles, TakesTheTailInQueueOrder) {
  std::vector<Particle> queue;
  for (std::uint64_t i = 0; i < 100; ++i) queue.push_back(home(i, 4));
  const auto lists = select_particles(queue, {{26, 6}, 68}, 4);
  ASSERT_EQ(lists[0].size(), 26u);
  ASSERT_EQ(lists[1].size(), 6u);
  EXPECT_EQ(lists[0].front().id, 68u);
  EXPECT_EQ(lists[0].back().id, 93u);
  EXPECT_EQ(lists[1].front().id, 94u);
  EXPECT_EQ(lists[1].back().id, 99u);
  EXPECT_EQ(queue.size(), 68u);
  for (const auto& list : lists)
    for (const auto& p : list) EXPECT_EQ(p.balanced_from, 4);
}

TEST(SelectParticles, CapsDemandAtEligibleCount) {
  std::vector<Particle> queue;
  for (std::uint64_t i = 0; i < 10; ++i) queue.push_back(home(i, 0));
  Particle loan = home(50, 1);
  loan.balanced_from = 1;
  queue.push_back(loan);
  const auto lists = select_particles(queue, {{26, 6}, 0}, 0);
  EXPECT_EQ(lists[0].size(), 8u);
  EXPECT_EQ(lists[1].size(), 2u);
  ASSERT_EQ(queue.size(), 1u);
  EXPECT_EQ(queue[0].id, 50u);  // on-loan particles are never re-balanced
}

TEST(SelectParticles, ZeroDecisionLeavesQueueUntouched) {
  std::vector<Particle> queue{home(1, 0), home(2, 0)};
  const auto before = queue;
  const auto lists = select_particles(queue, {{0, 0, 0}, 2}, 0);
  EXPECT_EQ(queue, before);
  for (const auto& l : lists) EXPECT_TRUE(l.empty());
}

TEST(SchedulerTokens, RoundTrip) {
  for (auto k : {SchedulerKind::none, SchedulerKind::constant, SchedulerKind::lma, SchedulerKind::gllma})
    EXPECT_EQ(parse_scheduler(to_string(k)), k);
  EXPECT_THROW(parse_scheduler("diffuse"), std::runtime_error);
}

}  // namespace
}  // namespace padv
