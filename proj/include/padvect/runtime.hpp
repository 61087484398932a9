#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "padvect/advect.hpp"
#include "padvect/balance.hpp"
#include "padvect/field.hpp"
#include "padvect/metrics.hpp"
#include "padvect/topology.hpp"

namespace padv {

struct SeedSpec {
  double aabb_scale = 1.0;  // edge of the centered seeding box, in (0, 1]
  Int3 stride{8, 8, 8};     // seed every stride-th lattice node per axis
};

struct SimulationSetup {
  FieldFunction field;
  Int3 resolution{64, 64, 64};
  ProcessGrid grid;
  SchedulerKind scheduler = SchedulerKind::none;
  BalanceOptions balance;
  double step = 0.001;
  std::int32_t max_iterations = 1000;
  std::size_t particles_per_round = 50'000;
  SeedSpec seeds;
  std::vector<Vec3> seed_points;  // explicit seeds; replace the AABB lattice when non-empty
  int workers = 1;              // ranks executed concurrently within a stage
  std::vector<int> rank_order;  // stage iteration order; empty means 0..N-1
  bool record_curves = true;
  std::int64_t round_cap = 100'000;
};

/// Rank owning the voxel that contains p (p inside the unit cube).
int owner_rank(const ProcessGrid& grid, Int3 resolution, const Vec3& p);

/// Seeds on lattice nodes inside the centered AABB, every stride-th node (global index divisible by
/// the stride), ids in lattice order with x fastest. Returns one queue per rank.
std::vector<std::vector<Particle>> seed_particles(const ProcessGrid& grid, Int3 resolution, const SeedSpec& seeds,
                                                  std::int32_t max_iterations);

/// Seeds at explicit positions, ids in list order. Throws ConfigError for points outside the cube.
std::vector<std::vector<Particle>> seed_points(const ProcessGrid& grid, Int3 resolution, std::span<const Vec3> points,
                                               std::int32_t max_iterations);

/// Message queues between face neighbors, delivered at stage barriers. Each sender only touches its
/// own outbox, so ranks may post concurrently. Delivery orders envelopes by sender rank, FIFO per
/// sender, independent of the order in which ranks executed.
template <typename Payload>
class Channel {
 public:
  struct Envelope {
    int from;
    std::int64_t round;
    Payload payload;
  };

  Channel(const std::vector<Neighborhood>* neighborhoods, std::int64_t round)
      : neighborhoods_(neighborhoods), round_(round), outbox_(neighborhoods->size()), inbox_(neighborhoods->size()) {}

  void post(int from, int to, Payload payload);
  void deliver();
  std::vector<Envelope>& inbox(int rank) { return inbox_[static_cast<std::size_t>(rank)]; }
  bool idle() const;

 private:
  const std::vector<Neighborhood>* neighborhoods_;
  std::int64_t round_;
  std::vector<std::vector<std::pair<int, Payload>>> outbox_;
  std::vector<std::vector<Envelope>> inbox_;
};

/// Particle handed between ranks, with the face it left its block through (if any).
struct Transit {
  Particle particle;
  std::optional<Direction> exit;
};

struct CollectMessage {
  std::vector<Transit> returned;           // surviving loans, out-of-bounds or not yet integrated
  std::vector<std::uint64_t> finished_ids;  // loans that terminated on the borrower
};

struct RankState {
  int rank = 0;
  Neighborhood neighborhood;
  std::shared_ptr<const Block> own_block;
  std::array<std::shared_ptr<const Block>, 6> replicas;  // indexed by Direction
  std::vector<Particle> queue;
  std::map<int, std::vector<std::uint64_t>> loaned_out;
  CurveStore curve_store;
  std::vector<Transit> pending_oob;
  struct LoggedSegment {
    std::int64_t round;
    CurveSegment segment;
  };
  std::vector<LoggedSegment> curve_log;

  BlockTable block_table() const;
};

/// Global particle bookkeeping after a round.
struct ParticleTally {
  std::int64_t round = 0;
  std::uint64_t seeds = 0;
  std::uint64_t active = 0;
  std::uint64_t terminated = 0;  // iteration budget exhausted
  std::uint64_t exited = 0;      // left the global domain

  bool conserved() const { return seeds == active + terminated + exited; }
};

struct RunResult {
  std::vector<std::vector<RoundRecord>> rounds;
  std::vector<ParticleTally> tallies;
  std::vector<Curve> curves;  // merged per particle, ascending id
  std::uint64_t seeds = 0;
  std::uint64_t total_steps = 0;
};

/// Lockstep simulation of the advection kernel over virtual ranks.
class Simulation {
 public:
  explicit Simulation(SimulationSetup setup);

  bool check_completion() const;
  std::vector<RoundRecord> run_round();
  RunResult run();

  const std::vector<RankState>& ranks() const { return ranks_; }
  const SimulationSetup& setup() const { return setup_; }
  std::int64_t round() const { return round_; }
  const ParticleTally& tally() const { return tally_; }

  /// Throws InvariantViolation if a queued particle is not contained by the block it would use.
  void check_containability() const;

  std::vector<Curve> merged_curves() const;

 private:
  template <typename Fn>
  void for_each_rank(Fn&& fn);

  SimulationSetup setup_;
  std::vector<Neighborhood> neighborhoods_;
  std::vector<RankState> ranks_;
  std::vector<int> order_;
  std::int64_t round_ = 0;
  ParticleTally tally_;
  std::uint64_t total_steps_ = 0;
};

}  // namespace padv
