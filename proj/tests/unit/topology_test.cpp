#include "padvect/topology.hpp"

#include <gtest/gtest.h>

#include <random>
#include <set>
#include <stdexcept>

#include "padvect/errors.hpp"

namespace padv {
namespace {

ProcessGrid random_grid(std::mt19937_64& rng, int max_dim) {
  std::uniform_int_distribution<std::int64_t> d(1, max_dim);
  const auto x = d(rng);
  const auto y = d(rng);
  return ProcessGrid{{x, y, d(rng)}};
}

TEST(RankCoords, CornersOfA2Cube) {
  const ProcessGrid g{{2, 2, 2}};
  EXPECT_EQ(rank_to_coords(g, 0), (Int3{0, 0, 0}));
  EXPECT_EQ(rank_to_coords(g, 7), (Int3{1, 1, 1}));
  EXPECT_EQ(rank_to_coords(g, 1), (Int3{0, 0, 1}));  // z fastest
  EXPECT_EQ(rank_to_coords(g, 4), (Int3{1, 0, 0}));
}

TEST(RankCoords, BijectionOnRandomGrids) {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 50; ++t) {
    const auto g = random_grid(rng, 5);
    std::set<std::tuple<std::int64_t, std::int64_t, std::int64_t>> seen;
    for (int r = 0; r < g.rank_count(); ++r) {
      const Int3 c = rank_to_coords(g, r);
      ASSERT_EQ(coords_to_rank(g, c), r);
      seen.insert({c.x, c.y, c.z});
    }
    ASSERT_EQ(static_cast<std::int64_t>(seen.size()), g.rank_count());
  }
}

TEST(RankCoords, OutOfRangeIsAnArgumentError) {
  const ProcessGrid g{{2, 2, 2}};
  EXPECT_THROW(rank_to_coords(g, 8), std::invalid_argument);
  EXPECT_THROW(rank_to_coords(g, -1), std::invalid_argument);
  EXPECT_THROW(coords_to_rank(g, {2, 0, 0}), std::invalid_argument);
}

TEST(MakeGrid, RejectsNonPositiveDims) {
  EXPECT_THROW(make_grid({0, 1, 1}), ConfigError);
  EXPECT_EQ(make_grid({3, 1, 2}).rank_count(), 6);
}

TEST(Neighborhood, Examples) {
  EXPECT_EQ(neighborhood_of(ProcessGrid{{2, 2, 2}}, 0).size(), 3u);
  const ProcessGrid g{{4, 2, 2}};
  const auto n = neighborhood_of(g, coords_to_rank(g, {1, 0, 0}));
  ASSERT_EQ(n.size(), 4u);
  EXPECT_EQ(n.neighbors[0].first, Direction::neg_x);
  EXPECT_EQ(n.neighbors[1].first, Direction::pos_x);
  EXPECT_EQ(n.neighbors[2].first, Direction::pos_y);
  EXPECT_EQ(n.neighbors[3].first, Direction::pos_z);
  EXPECT_TRUE(neighborhood_of(ProcessGrid{{1, 1, 1}}, 0).neighbors.empty());
}

TEST(Neighborhood, SymmetricFaceAdjacentAndOrdered) {
  std::mt19937_64 rng(13);
  for (int t = 0; t < 100; ++t) {
    const auto g = random_grid(rng, 5);
    for (int r = 0; r < g.rank_count(); ++r) {
      const auto n = neighborhood_of(g, r);
      ASSERT_LE(n.size(), 6u);
      for (std::size_t i = 0; i < n.size(); ++i) {
        const auto [d, nr] = n.neighbors[i];
        if (i > 0) ASSERT_LT(static_cast<int>(n.neighbors[i - 1].first), static_cast<int>(d));
        const Int3 diff{rank_to_coords(g, nr).x - rank_to_coords(g, r).x,
                        rank_to_coords(g, nr).y - rank_to_coords(g, r).y,
                        rank_to_coords(g, nr).z - rank_to_coords(g, r).z};
        Int3 expected{0, 0, 0};
        expected[axis_of(d)] = sign_of(d);
        ASSERT_EQ(diff, expected);
        const auto back = neighborhood_of(g, nr);
        ASSERT_EQ(back.in_direction(opposite(d)), r);
        ASSERT_EQ(back.direction_to(r), opposite(d));
      }
    }
  }
}

TEST(Decompose, EvenSplitWithThreeReplicasPerCorner) {
  const auto ex = decompose(ProcessGrid{{2, 2, 2}}, uniform3(64));
  for (const auto& e : ex) {
    EXPECT_EQ(e.core.dims, uniform3(32));
    EXPECT_EQ(e.replicas.size(), 3u);
  }
}

TEST(Decompose, RemainderGoesLow) {
  EXPECT_EQ(split_axis(65, 2, 0), (std::pair<std::int64_t, std::int64_t>{0, 33}));
  EXPECT_EQ(split_axis(65, 2, 1), (std::pair<std::int64_t, std::int64_t>{33, 32}));
  EXPECT_EQ(split_axis(10, 4, 3), (std::pair<std::int64_t, std::int64_t>{8, 2}));
}

TEST(Decompose, ResolutionBelowGridIsAConfigError) {
  EXPECT_THROW(decompose(ProcessGrid{{4, 1, 1}}, {3, 8, 8}), ConfigError);
}

TEST(Decompose, PartitionAndReplicaClosure) {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 60; ++t) {
    const auto g = random_grid(rng, 4);
    std::uniform_int_distribution<std::int64_t> rd(4, 13);
    const Int3 res{rd(rng), rd(rng), rd(rng)};
    const auto ex = decompose(g, res);
    std::vector<int> owner(static_cast<std::size_t>(res.product()), -1);
    for (int r = 0; r < g.rank_count(); ++r) {
      const auto& c = ex[r].core;
      for (std::int64_t k = c.origin.z; k < c.origin.z + c.dims.z; ++k)
        for (std::int64_t j = c.origin.y; j < c.origin.y + c.dims.y; ++j)
          for (std::int64_t i = c.origin.x; i < c.origin.x + c.dims.x; ++i) {
            auto& o = owner[static_cast<std::size_t>(i + res.x * (j + res.y * k))];
            ASSERT_EQ(o, -1);
            o = r;
          }
      const auto n = neighborhood_of(g, r);
      ASSERT_EQ(ex[r].replicas.size(), n.size());
      for (std::size_t i = 0; i < n.size(); ++i) {
        ASSERT_EQ(ex[r].replicas[i].first, n.neighbors[i].first);
        ASSERT_EQ(ex[r].replicas[i].second, ex[n.neighbors[i].second].core);
      }
    }
    for (int o : owner) ASSERT_NE(o, -1);
  }
}

TEST(Route, InteriorAndBoundary) {
  const ProcessGrid g{{3, 3, 3}};
  const int center = coords_to_rank(g, {1, 1, 1});
  EXPECT_EQ(route_out_of_bounds(neighborhood_of(g, center), Direction::pos_x), coords_to_rank(g, {2, 1, 1}));
  EXPECT_FALSE(route_out_of_bounds(neighborhood_of(g, 0), Direction::neg_x).has_value());
}

TEST(DominantExit, LargestOvershootThenAxisOrder) {
  const Int3 res = uniform3(64);
  const Int3 lo{0, 0, 0};
  const Int3 hi{32, 32, 32};
  EXPECT_FALSE(dominant_exit({10, 10, 10}, lo, hi, res).has_value());
  EXPECT_EQ(dominant_exit({31.7, 10, 10}, lo, hi, res), Direction::pos_x);
  EXPECT_EQ(dominant_exit({31.7, 31.9, 10}, lo, hi, res), Direction::pos_y);
  EXPECT_EQ(dominant_exit({31.75, 31.75, 10}, lo, hi, res), Direction::pos_x);  // tie -> x
  EXPECT_EQ(dominant_exit({10, 31.75, 31.75}, lo, hi, res), Direction::pos_y);  // tie -> y
  EXPECT_EQ(dominant_exit({10, 10, 31.6}, lo, hi, res), Direction::pos_z);
  const Int3 lo2{32, 0, 0};
  const Int3 hi2{64, 32, 32};
  EXPECT_EQ(dominant_exit({31.0, 31.9, 10}, lo2, hi2, res), Direction::neg_x);
  EXPECT_EQ(dominant_exit({31.2, 31.9, 10}, lo2, hi2, res), Direction::pos_y);
}

TEST(MostCubicGrid, Factorizations) {
  EXPECT_EQ(most_cubic_grid(16).dims, (Int3{4, 2, 2}));
  EXPECT_EQ(most_cubic_grid(8).dims, (Int3{2, 2, 2}));
  EXPECT_EQ(most_cubic_grid(1).dims, (Int3{1, 1, 1}));
  EXPECT_EQ(most_cubic_grid(2).dims, (Int3{2, 1, 1}));
  EXPECT_EQ(most_cubic_grid(12).dims, (Int3{3, 2, 2}));
  EXPECT_EQ(most_cubic_grid(7).dims, (Int3{7, 1, 1}));
}

}  // namespace
}  // namespace padv
