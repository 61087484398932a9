#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "padvect/vec3.hpp"

namespace padv {

enum class FieldKind { abc, jets, toroidal };

std::string_view to_string(FieldKind kind);
FieldKind parse_field_kind(std::string_view token);

/// Closed-form stand-in vector field on the unit cube.
///
/// Parameters by kind (defaults filled by make_field):
///   abc      A, B, C        (sqrt 3, sqrt 2, 1)
///   jets     w0             (0.3)
///   toroidal R0, kappa      (0.25, 0.5)
struct AnalyticField {
  FieldKind kind = FieldKind::abc;
  std::map<std::string, double> parameters;
};

AnalyticField make_field(FieldKind kind);

bool in_unit_cube(const Vec3& p);

/// Throws DomainError when p is outside [0,1]^3.
Vec3 evaluate_field(const AnalyticField& field, const Vec3& p);

/// Any pointwise vector field over the unit cube. Used to rasterize analytic and test fields alike.
using FieldFunction = std::function<Vec3(const Vec3&)>;

FieldFunction as_function(const AnalyticField& field);

/// Rasterized brick of the global lattice with a one-voxel ghost layer.
///
/// Lattice node i on an axis sits at i * spacing, spacing = 1 / (resolution - 1), and is the center
/// of voxel i, which spans lattice coordinates [i - 1/2, i + 1/2). The block owns voxels
/// [origin, origin + core_dims). With one ghost node per side, interpolation stays possible half a
/// voxel beyond the owned region on every face. Ghost nodes outside the global lattice are clamped
/// to the boundary sample.
class Block {
 public:
  static constexpr std::int64_t kGhost = 1;

  Block(Int3 resolution, Int3 origin, Int3 core_dims, std::vector<Vec3> data);

  const Int3& resolution() const { return resolution_; }
  const Int3& origin() const { return origin_; }
  const Int3& core_dims() const { return core_dims_; }
  const Int3& padded_dims() const { return padded_dims_; }
  const Vec3& spacing() const { return spacing_; }
  const std::vector<Vec3>& data() const { return data_; }

  /// Stored sample at a global lattice index; the index may address ghost nodes.
  const Vec3& node(std::int64_t i, std::int64_t j, std::int64_t k) const;

  /// True when p falls in a voxel owned by this block.
  bool core_contains(const Vec3& p) const;

  /// True when the trilinear stencil around p is fully present (core or ghost nodes).
  bool can_sample(const Vec3& p) const;

 private:
  Int3 resolution_;
  Int3 origin_;
  Int3 core_dims_;
  Int3 padded_dims_;
  Vec3 spacing_;
  std::vector<Vec3> data_;
};

/// Continuous lattice coordinate (position * (resolution - 1)), snapped onto a node when within a
/// few ulps so positions built as i / (resolution - 1) land exactly on node i.
double lattice_coordinate(double position, std::int64_t resolution);
double lattice_coordinate(const Block& block, const Vec3& p, int axis);

/// Index of the voxel containing a lattice coordinate, clamped to [0, resolution - 1].
std::int64_t owning_voxel(double lattice_coord, std::int64_t resolution);

Block rasterize_block(const FieldFunction& field, Int3 global_resolution, Int3 origin_voxel, Int3 core_dims);
Block rasterize_block(const AnalyticField& field, Int3 global_resolution, Int3 origin_voxel, Int3 core_dims);

/// Trilinear interpolation of the eight enclosing lattice samples. Throws OutOfBlockError when p
/// leaves the ghost-expanded extent.
Vec3 sample_trilinear(const Block& block, const Vec3& p);

/// Non-throwing variant for hot loops.
std::optional<Vec3> try_sample_trilinear(const Block& block, const Vec3& p);

/// Debug export: `<stem>.raw` holds little-endian float32 xyz triplets (x fastest, ghost layer
/// included) and `<stem>.json` holds dims, origin and spacing.
void export_block(const Block& block, const std::filesystem::path& stem);

}  // namespace padv
