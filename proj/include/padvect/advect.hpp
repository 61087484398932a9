#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "padvect/field.hpp"
#include "padvect/topology.hpp"
#include "padvect/vec3.hpp"

namespace padv {

struct Particle {
  std::uint64_t id = 0;
  Vec3 position;
  std::int32_t remaining_iterations = 0;
  int home_rank = 0;
  std::optional<int> balanced_from;  // donor rank while on loan

  friend bool operator==(const Particle&, const Particle&) = default;
};

enum class StepStatus {
  inside,       // p' stays in the block core
  exit_block,   // p' is valid but owned by a neighboring block
  exit_domain,  // p' left the unit cube
  rejected,     // a stage point fell outside the ghost-expanded extent
};

struct StepResult {
  StepStatus status = StepStatus::inside;
  Vec3 position;
  std::optional<Direction> direction;
};

/// Classic fixed-step RK4 on the trilinear sampler of `block`. `p` must be sampleable.
StepResult rk4_step(const Block& block, const Vec3& p, double h);

/// Exit face of a point not owned by `block`, dominant-overshoot rule.
std::optional<Direction> exit_direction(const Block& block, const Vec3& p);

struct RoundInfo {
  std::size_t count = 0;          // particles taken from the queue front
  std::size_t vertex_stride = 1;  // 1 + max remaining iterations among them
  std::vector<std::size_t> offsets;
  std::vector<std::optional<Direction>> oob;  // filled by integrate
};

/// Selects the first min(|queue|, particles_per_round) particles.
RoundInfo compute_round_info(std::span<const Particle> queue, std::size_t particles_per_round);

struct CurveSegment {
  std::uint64_t id = 0;
  std::vector<Vec3> vertices;
};

/// Flat per-round vertex storage: one slot of `vertex_stride` vertices per particle. Unused slots
/// hold the reserved sentinel vertex (quiet NaN triplet) and carry an unset flag.
class CurveStore {
 public:
  static Vec3 sentinel();

  void allocate(const RoundInfo& info, std::span<const Particle> selected);
  void append(std::size_t particle_index, const Vec3& vertex);

  std::size_t capacity() const { return vertices_.size(); }
  std::size_t particle_count() const { return records_.size(); }
  std::size_t filled(std::size_t particle_index) const { return records_[particle_index].filled; }
  const std::vector<Vec3>& vertices() const { return vertices_; }
  bool is_set(std::size_t slot) const { return set_[slot] != 0; }

  std::vector<CurveSegment> prune() const;

 private:
  struct Record {
    std::uint64_t id;
    std::size_t offset;
    std::size_t stride;
    std::size_t filled;
  };
  std::vector<Vec3> vertices_;
  std::vector<std::uint8_t> set_;
  std::vector<Record> records_;
};

std::vector<CurveSegment> prune_curves(const CurveStore& store);

/// Blocks a rank can integrate in: its own core and the replicas of its face neighbors.
struct BlockTable {
  int rank = 0;
  const Neighborhood* neighborhood = nullptr;
  const Block* own = nullptr;
  std::array<const Block*, 6> replicas{};  // indexed by Direction

  /// Own block for home particles, the donor's replica for particles on loan. Throws
  /// InvariantViolation when the block is absent.
  const Block& containing_block(const Particle& p) const;
};

enum class Fate { exhausted, left_domain, exited_block };

struct IntegrateResult {
  std::vector<Fate> fates;  // parallel to the selected particles
  std::uint64_t steps = 0;  // accepted RK4 steps (work units)
};

/// Steps every selected particle until it runs out of iterations, leaves its block, or leaves the
/// domain. Positions and remaining iterations are updated in place; vertices go to `store`, exit
/// directions to `info.oob`. `workers` > 1 splits the particles over threads with identical results.
IntegrateResult integrate(const BlockTable& blocks, RoundInfo& info, std::span<Particle> selected, CurveStore& store,
                          double h, int workers = 1);

struct Curve {
  std::uint64_t id = 0;
  std::vector<Vec3> vertices;
};

enum class Precision { float32, float64 };

/// Line-set file: one JSON header line (particle count, ids, vertex counts, scalar type) followed by
/// little-endian xyz scalars of every curve in header order.
void write_lineset(const std::filesystem::path& path, std::span<const Curve> curves, Precision precision);
std::vector<Curve> read_lineset(const std::filesystem::path& path);

}  // namespace padv
