#include "padvect/topology.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "padvect/errors.hpp"
#include "padvect/field.hpp"

namespace padv {

std::string_view to_string(Direction d) {
  static constexpr std::array<std::string_view, 6> names = {"-x", "+x", "-y", "+y", "-z", "+z"};
  return names[static_cast<std::size_t>(d)];
}

ProcessGrid make_grid(Int3 dims) {
  if (dims.x < 1 || dims.y < 1 || dims.z < 1) throw ConfigError("process grid dims must be >= 1 on every axis");
  return ProcessGrid{dims};
}

ProcessGrid most_cubic_grid(std::int64_t rank_count) {
  if (rank_count < 1) throw ConfigError("node count must be >= 1");
  Int3 best{rank_count, 1, 1};
  std::int64_t best_surface = std::numeric_limits<std::int64_t>::max();
  for (std::int64_t a = 1; a <= rank_count; ++a) {
    if (rank_count % a != 0) continue;
    for (std::int64_t b = 1; b <= a; ++b) {
      if ((rank_count / a) % b != 0) continue;
      const std::int64_t c = rank_count / a / b;
      if (c > b) continue;
      const std::int64_t surface = a * b + b * c + a * c;
      if (surface < best_surface) {
        best_surface = surface;
        best = {a, b, c};
      }
    }
  }
  return ProcessGrid{best};
}

Int3 rank_to_coords(const ProcessGrid& grid, int rank) {
  if (rank < 0 || rank >= grid.rank_count()) throw std::invalid_argument("rank " + std::to_string(rank) + " out of range");
  const std::int64_t z = rank % grid.dims.z;
  const std::int64_t y = (rank / grid.dims.z) % grid.dims.y;
  const std::int64_t x = rank / (grid.dims.z * grid.dims.y);
  return {x, y, z};
}

int coords_to_rank(const ProcessGrid& grid, const Int3& c) {
  for (int a = 0; a < 3; ++a)
    if (c[a] < 0 || c[a] >= grid.dims[a]) throw std::invalid_argument("coordinates outside the process grid");
  return static_cast<int>((c.x * grid.dims.y + c.y) * grid.dims.z + c.z);
}

std::optional<int> Neighborhood::in_direction(Direction d) const {
  for (const auto& [dir, r] : neighbors)
    if (dir == d) return r;
  return std::nullopt;
}

std::optional<std::size_t> Neighborhood::index_of(int neighbor_rank) const {
  for (std::size_t i = 0; i < neighbors.size(); ++i)
    if (neighbors[i].second == neighbor_rank) return i;
  return std::nullopt;
}

std::optional<Direction> Neighborhood::direction_to(int neighbor_rank) const {
  if (auto i = index_of(neighbor_rank)) return neighbors[*i].first;
  return std::nullopt;
}

Neighborhood neighborhood_of(const ProcessGrid& grid, int rank) {
  const Int3 c = rank_to_coords(grid, rank);
  Neighborhood n{rank, {}};
  for (Direction d : kAllDirections) {
    Int3 other = c;
    other[axis_of(d)] += sign_of(d);
    const int a = axis_of(d);
    if (other[a] < 0 || other[a] >= grid.dims[a]) continue;
    n.neighbors.emplace_back(d, coords_to_rank(grid, other));
  }
  return n;
}

std::pair<std::int64_t, std::int64_t> split_axis(std::int64_t total, std::int64_t parts, std::int64_t index) {
  const std::int64_t base = total / parts;
  const std::int64_t remainder = total % parts;
  const std::int64_t size = base + (index < remainder ? 1 : 0);
  const std::int64_t origin = index * base + std::min(index, remainder);
  return {origin, size};
}

std::vector<RankExtents> decompose(const ProcessGrid& grid, Int3 global_resolution) {
  for (int a = 0; a < 3; ++a)
    if (global_resolution[a] < grid.dims[a])
      throw ConfigError("global resolution smaller than the process grid on axis " + std::to_string(a));
  const auto core_of = [&](int rank) {
    const Int3 c = rank_to_coords(grid, rank);
    Extent e;
    for (int a = 0; a < 3; ++a) {
      const auto [origin, size] = split_axis(global_resolution[a], grid.dims[a], c[a]);
      e.origin[a] = origin;
      e.dims[a] = size;
    }
    return e;
  };
  std::vector<RankExtents> result;
  result.reserve(static_cast<std::size_t>(grid.rank_count()));
  for (int r = 0; r < grid.rank_count(); ++r) {
    RankExtents re{core_of(r), {}};
    for (const auto& [d, nr] : neighborhood_of(grid, r).neighbors) re.replicas.emplace_back(d, core_of(nr));
    result.push_back(std::move(re));
  }
  return result;
}

std::optional<int> route_out_of_bounds(const Neighborhood& neigh, Direction exit_direction) {
  return neigh.in_direction(exit_direction);
}

std::optional<Direction> dominant_exit(const std::array<double, 3>& g, const Int3& lower, const Int3& upper,
                                       const Int3& resolution) {
  std::optional<Direction> best;
  double best_overshoot = 0.0;
  for (int a = 0; a < 3; ++a) {
    double overshoot = 0.0;
    int sign = 0;
    const std::int64_t voxel = owning_voxel(g[a], resolution[a]);
    if (voxel < lower[a]) {
      overshoot = static_cast<double>(lower[a]) - 0.5 - g[a];
      sign = -1;
    } else if (voxel >= upper[a]) {
      overshoot = g[a] - (static_cast<double>(upper[a]) - 0.5);
      sign = 1;
    } else {
      continue;
    }
    if (!best || overshoot > best_overshoot) {
      best = make_direction(a, sign);
      best_overshoot = overshoot;
    }
  }
  return best;
}

}  // namespace padv
