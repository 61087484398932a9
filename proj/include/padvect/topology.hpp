#pragma once

#include <array>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "padvect/vec3.hpp"

namespace padv {

/// Face directions in canonical neighborhood order.
enum class Direction : int { neg_x = 0, pos_x, neg_y, pos_y, neg_z, pos_z };

inline constexpr std::array<Direction, 6> kAllDirections = {Direction::neg_x, Direction::pos_x, Direction::neg_y,
                                                            Direction::pos_y, Direction::neg_z, Direction::pos_z};

constexpr int axis_of(Direction d) { return static_cast<int>(d) / 2; }
constexpr int sign_of(Direction d) { return static_cast<int>(d) % 2 == 0 ? -1 : 1; }
constexpr Direction opposite(Direction d) { return static_cast<Direction>(static_cast<int>(d) ^ 1); }
constexpr Direction make_direction(int axis, int sign) { return static_cast<Direction>(2 * axis + (sign > 0 ? 1 : 0)); }
std::string_view to_string(Direction d);

/// Cartesian arrangement of ranks. Ranks are numbered row-major (z fastest), as MPI_Cart does.
struct ProcessGrid {
  Int3 dims{1, 1, 1};

  std::int64_t rank_count() const { return dims.product(); }
};

/// Validates dims (all >= 1); throws ConfigError otherwise.
ProcessGrid make_grid(Int3 dims);

/// The most cubic 3-factor grid for n ranks, sorted x >= y >= z (16 -> (4,2,2)).
ProcessGrid most_cubic_grid(std::int64_t rank_count);

Int3 rank_to_coords(const ProcessGrid& grid, int rank);
int coords_to_rank(const ProcessGrid& grid, const Int3& coords);

struct Neighborhood {
  int rank = 0;
  std::vector<std::pair<Direction, int>> neighbors;  // ordered -x,+x,-y,+y,-z,+z; absent faces skipped

  std::size_t size() const { return neighbors.size(); }
  std::optional<int> in_direction(Direction d) const;
  /// Position of `neighbor_rank` in `neighbors`, if it is a face neighbor.
  std::optional<std::size_t> index_of(int neighbor_rank) const;
  std::optional<Direction> direction_to(int neighbor_rank) const;
};

Neighborhood neighborhood_of(const ProcessGrid& grid, int rank);

/// Axis-aligned range of lattice nodes.
struct Extent {
  Int3 origin;
  Int3 dims;

  friend bool operator==(const Extent&, const Extent&) = default;
};

struct RankExtents {
  Extent core;
  std::vector<std::pair<Direction, Extent>> replicas;  // cores of the face neighbors, neighborhood order
};

/// Near-even split of `total` nodes into `parts`, remainder to the lowest indices. Returns {origin, size}.
std::pair<std::int64_t, std::int64_t> split_axis(std::int64_t total, std::int64_t parts, std::int64_t index);

std::vector<RankExtents> decompose(const ProcessGrid& grid, Int3 global_resolution);

/// Neighbor across `exit_direction`, or nothing when that face is the global domain boundary.
std::optional<int> route_out_of_bounds(const Neighborhood& neigh, Direction exit_direction);

/// Exit face for a point (in lattice units) whose voxel lies outside [lower, upper), picking the
/// axis with the largest overshoot in voxels; ties go to x, then y, then z. Nothing if inside.
std::optional<Direction> dominant_exit(const std::array<double, 3>& lattice_coord, const Int3& lower, const Int3& upper,
                                       const Int3& resolution);

}  // namespace padv
