#include "padvect/advect.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <random>

#include "padvect/errors.hpp"
#include "padvect/topology.hpp"

namespace padv {
namespace {

Vec3 drift_x(const Vec3&) { return {1.0, 0.0, 0.0}; }
Vec3 zero(const Vec3&) { return {0.0, 0.0, 0.0}; }
Vec3 circular(const Vec3& p) { return {-(p.y - 0.5), p.x - 0.5, 0.0}; }

Block whole(FieldFunction f, std::int64_t res) { return rasterize_block(std::move(f), uniform3(res), {0, 0, 0}, uniform3(res)); }

Particle fresh(std::uint64_t id, Vec3 p, std::int32_t remaining = 1000, int rank = 0) {
  return Particle{id, p, remaining, rank, std::nullopt};
}

// Endpoint error of the circular flow after time T, against the exact rotation.
double circular_error(double h, double T) {
  const Block b = whole(circular, 8);
  Vec3 p{0.75, 0.5, 0.5};
  const auto n = static_cast<long>(std::llround(T / h));
  for (long i = 0; i < n; ++i) p = rk4_step(b, p, h).position;
  const Vec3 exact{0.5 + 0.25 * std::cos(T), 0.5 + 0.25 * std::sin(T), 0.5};
  return norm(p - exact);
}

TEST(Rk4Step, ConstantField) {
  const Block b = whole(drift_x, 16);
  const auto r = rk4_step(b, {0.5, 0.5, 0.5}, 0.001);
  EXPECT_EQ(r.status, StepStatus::inside);
  EXPECT_DOUBLE_EQ(r.position.x, 0.501);
  EXPECT_EQ(r.position.y, 0.5);
  EXPECT_EQ(r.position.z, 0.5);
}

TEST(Rk4Step, ZeroFieldIsAFixedPoint) {
  const Block b = whole(zero, 16);
  const Vec3 p{0.3, 0.6, 0.9};
  EXPECT_EQ(rk4_step(b, p, 0.001).position, p);
}

TEST(Rk4Step, CircularFieldMatchesRotation) {
  const Block b = whole(circular, 16);
  Vec3 p{0.75, 0.5, 0.5};
  for (int i = 0; i < 100; ++i) p = rk4_step(b, p, 0.001).position;
  EXPECT_NEAR(norm(p - Vec3{0.5, 0.5, 0.5}), 0.25, 1e-10);
  EXPECT_NEAR(p.x, 0.5 + 0.25 * std::cos(0.1), 1e-10);
  EXPECT_NEAR(p.y, 0.5 + 0.25 * std::sin(0.1), 1e-10);
}

TEST(Rk4Step, FourthOrderConvergence) {
  const double T = 50.0;
  const double e4 = circular_error(4e-3, T);
  const double e2 = circular_error(2e-3, T);
  const double e1 = circular_error(1e-3, T);
  EXPECT_GE(e4 / e2, 12.0);
  EXPECT_LE(e4 / e2, 20.0);
  EXPECT_GE(e2 / e1, 12.0);
  EXPECT_LE(e2 / e1, 20.0);
}

TEST(Rk4Step, UnsampleableStartIsAnInvariantViolation) {
  const Block b = rasterize_block(drift_x, uniform3(21), {0, 0, 0}, {5, 21, 21});
  EXPECT_THROW(rk4_step(b, {0.9, 0.5, 0.5}, 0.001), InvariantViolation);
}

TEST(Rk4Step, StageOverrunIsRejectedWithDirection) {
  const Block b = rasterize_block(drift_x, uniform3(21), {0, 0, 0}, {5, 21, 21});
  // Start at lattice 4.4, a step of two voxels pushes the stage points past the ghost node.
  const auto r = rk4_step(b, {4.4 / 20.0, 0.5, 0.5}, 0.1);
  EXPECT_EQ(r.status, StepStatus::rejected);
  EXPECT_EQ(r.direction, Direction::pos_x);
  EXPECT_EQ(r.position.x, 4.4 / 20.0);
}

TEST(Rk4Step, LeavingTheCubeIsADomainExit) {
  const Block b = whole(drift_x, 16);
  EXPECT_EQ(rk4_step(b, {0.9995, 0.5, 0.5}, 0.001).status, StepStatus::exit_domain);
}

TEST(RoundInfo, Examples) {
  std::vector<Particle> q;
  for (int i = 0; i < 15; ++i) q.push_back(fresh(i, {0.5, 0.5, 0.5}, 10 + i));
  const auto info = compute_round_info(q, 10);
  EXPECT_EQ(info.count, 10u);
  EXPECT_EQ(info.vertex_stride, 20u);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(info.offsets[i], i * 20);

  std::vector<Particle> f(4, fresh(0, {0.5, 0.5, 0.5}));
  EXPECT_EQ(compute_round_info(f, 50000).vertex_stride, 1001u);

  const auto empty = compute_round_info({}, 10);
  EXPECT_EQ(empty.count, 0u);
  EXPECT_EQ(empty.vertex_stride, 1u);
}

struct SingleRank {
  ProcessGrid grid{{1, 1, 1}};
  Neighborhood hood = neighborhood_of(grid, 0);
  Block block;
  BlockTable table;

  explicit SingleRank(Block b) : block(std::move(b)) {
    table.rank = 0;
    table.neighborhood = &hood;
    table.own = &block;
  }
};

TEST(Integrate, ExhaustsRemainingIterations) {
  SingleRank s(whole([](const Vec3&) { return Vec3{0.01, 0, 0}; }, 16));
  std::vector<Particle> sel{fresh(7, {0.5, 0.5, 0.5}, 3)};
  auto info = compute_round_info(sel, 10);
  CurveStore store;
  store.allocate(info, sel);
  const auto res = integrate(s.table, info, sel, store, 0.001);
  EXPECT_EQ(res.fates[0], Fate::exhausted);
  EXPECT_EQ(res.steps, 3u);
  EXPECT_EQ(sel[0].remaining_iterations, 0);
  const auto segs = store.prune();
  ASSERT_EQ(segs.size(), 1u);
  EXPECT_EQ(segs[0].id, 7u);
  EXPECT_EQ(segs[0].vertices.size(), 3u);
  EXPECT_EQ(store.capacity(), 4u);
  EXPECT_FALSE(store.is_set(3));
}

TEST(Integrate, FaceExitAfterCeilDistanceOverH) {
  const ProcessGrid grid{{2, 1, 1}};
  const auto hood = neighborhood_of(grid, 0);
  const Block own = rasterize_block(drift_x, uniform3(64), {0, 0, 0}, {32, 64, 64});
  BlockTable table{0, &hood, &own, {}};
  const double x0 = 30.0 / 63.0;
  const double h = 0.001;
  std::vector<Particle> sel{fresh(1, {x0, 0.5, 0.5})};
  auto info = compute_round_info(sel, 10);
  CurveStore store;
  store.allocate(info, sel);
  const auto res = integrate(table, info, sel, store, h);
  const auto expected = static_cast<std::uint64_t>(std::ceil((31.5 / 63.0 - x0) / h));
  EXPECT_EQ(res.fates[0], Fate::exited_block);
  EXPECT_EQ(info.oob[0], Direction::pos_x);
  EXPECT_EQ(res.steps, expected);
  EXPECT_EQ(store.filled(0), expected);
  EXPECT_EQ(sel[0].remaining_iterations, 1000 - static_cast<std::int32_t>(expected));
}

TEST(Integrate, DomainExitTerminatesWithoutAVertex) {
  SingleRank s(whole(drift_x, 16));
  std::vector<Particle> sel{fresh(2, {0.9975, 0.5, 0.5})};
  auto info = compute_round_info(sel, 10);
  CurveStore store;
  store.allocate(info, sel);
  const auto res = integrate(s.table, info, sel, store, 0.001);
  EXPECT_EQ(res.fates[0], Fate::left_domain);
  EXPECT_EQ(res.steps, 2u);
  EXPECT_EQ(store.filled(0), 2u);
  EXPECT_EQ(sel[0].remaining_iterations, 0);
}

TEST(Integrate, MissingDonorBlockIsAnInvariantViolation) {
  SingleRank s(whole(drift_x, 16));
  std::vector<Particle> sel{fresh(3, {0.5, 0.5, 0.5}, 10, 1)};
  sel[0].balanced_from = 1;
  auto info = compute_round_info(sel, 10);
  CurveStore store;
  store.allocate(info, sel);
  EXPECT_THROW(integrate(s.table, info, sel, store, 0.001), InvariantViolation);
  std::vector<Particle> foreign{fresh(4, {0.5, 0.5, 0.5}, 10, 3)};
  auto info2 = compute_round_info(foreign, 10);
  store.allocate(info2, foreign);
  EXPECT_THROW(integrate(s.table, info2, foreign, store, 0.001), InvariantViolation);
}

std::vector<Particle> random_particles(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  std::uniform_int_distribution<std::int32_t> it(0, 300);
  std::vector<Particle> ps;
  for (std::size_t i = 0; i < n; ++i) ps.push_back(fresh(i, {u(rng), u(rng), u(rng)}, it(rng)));
  return ps;
}

TEST(Integrate, DeterministicAndWorkerIndependent) {
  SingleRank s(rasterize_block(as_function(make_field(FieldKind::abc)), uniform3(32), {0, 0, 0}, uniform3(32)));
  const auto seeds = random_particles(64, 77);
  auto run = [&](int workers) {
    auto sel = seeds;
    auto info = compute_round_info(sel, 1000);
    CurveStore store;
    store.allocate(info, sel);
    const auto res = integrate(s.table, info, sel, store, 0.001, workers);
    return std::tuple{sel, res.steps, store.vertices(), res.fates};
  };
  const auto a = run(1);
  const auto b = run(1);
  const auto c = run(4);
  EXPECT_EQ(std::get<0>(a), std::get<0>(b));
  EXPECT_EQ(std::get<1>(a), std::get<1>(c));
  EXPECT_EQ(std::get<3>(a), std::get<3>(c));
  EXPECT_EQ(std::get<0>(a), std::get<0>(c));
  // NaN != NaN, so compare bytes.
  const auto& va = std::get<2>(a);
  const auto& vc = std::get<2>(c);
  ASSERT_EQ(va.size(), vc.size());
  EXPECT_EQ(std::memcmp(va.data(), vc.data(), va.size() * sizeof(Vec3)), 0);
}

TEST(CurveStore, SentinelDisciplineAndOverflow) {
  std::vector<Particle> sel{fresh(1, {0.5, 0.5, 0.5}, 2), fresh(2, {0.5, 0.5, 0.5}, 1)};
  const auto info = compute_round_info(sel, 10);
  CurveStore store;
  store.allocate(info, sel);
  EXPECT_EQ(store.capacity(), 6u);
  store.append(0, {0.1, 0.2, 0.3});
  const auto segs = prune_curves(store);
  ASSERT_EQ(segs.size(), 2u);
  EXPECT_EQ(segs[0].vertices.size(), 1u);
  EXPECT_TRUE(segs[1].vertices.empty());
  EXPECT_TRUE(std::isnan(store.vertices()[1].x));
  store.append(0, {0.1, 0.2, 0.3});
  store.append(0, {0.1, 0.2, 0.3});
  EXPECT_THROW(store.append(0, {0, 0, 0}), InvariantViolation);
  for (const auto& seg : prune_curves(store))
    for (const auto& v : seg.vertices) EXPECT_FALSE(std::isnan(v.x));
}

TEST(LineSet, RoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "padvect_lineset";
  std::filesystem::create_directories(dir);
  const std::vector<Curve> curves{{5, {{0.1, 0.2, 0.3}, {0.4, 0.5, 0.6}}}, {9, {}}, {11, {{1.0 / 3.0, 0, 1}}}};
  write_lineset(dir / "a.f64", curves, Precision::float64);
  const auto back = read_lineset(dir / "a.f64");
  ASSERT_EQ(back.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(back[i].id, curves[i].id);
    EXPECT_EQ(back[i].vertices, curves[i].vertices);
  }
  write_lineset(dir / "a.f32", curves, Precision::float32);
  const auto narrow = read_lineset(dir / "a.f32");
  EXPECT_EQ(narrow[2].vertices[0].x, static_cast<double>(static_cast<float>(1.0 / 3.0)));
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace padv
