#include "padvect/field.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numbers>

#include "json.hpp"

#include "padvect/errors.hpp"

namespace padv {

std::string_view to_string(FieldKind kind) {
  switch (kind) {
    case FieldKind::abc:
      return "abc";
    case FieldKind::jets:
      return "jets";
    case FieldKind::toroidal:
      return "toroidal";
  }
  return "unknown";
}

FieldKind parse_field_kind(std::string_view token) {
  if (token == "abc") return FieldKind::abc;
  if (token == "jets") return FieldKind::jets;
  if (token == "toroidal") return FieldKind::toroidal;
  throw ConfigError("unknown field kind '" + std::string(token) + "' (expected abc|jets|toroidal)");
}

AnalyticField make_field(FieldKind kind) {
  AnalyticField field{kind, {}};
  switch (kind) {
    case FieldKind::abc:
      field.parameters = {{"A", std::numbers::sqrt3}, {"B", std::numbers::sqrt2}, {"C", 1.0}};
      break;
    case FieldKind::jets:
      field.parameters = {{"w0", 0.3}};
      break;
    case FieldKind::toroidal:
      field.parameters = {{"R0", 0.25}, {"kappa", 0.5}};
      break;
  }
  return field;
}

namespace {

double parameter(const AnalyticField& field, const std::string& name) {
  auto it = field.parameters.find(name);
  if (it != field.parameters.end()) return it->second;
  return make_field(field.kind).parameters.at(name);
}

Vec3 abc(const AnalyticField& field, const Vec3& p) {
  const double a = parameter(field, "A");
  const double b = parameter(field, "B");
  const double c = parameter(field, "C");
  constexpr double two_pi = 2.0 * std::numbers::pi;
  const double qx = two_pi * p.x;
  const double qy = two_pi * p.y;
  const double qz = two_pi * p.z;
  return {a * std::sin(qz) + c * std::cos(qy), b * std::sin(qx) + a * std::cos(qz),
          c * std::sin(qy) + b * std::cos(qx)};
}

Vec3 jets(const AnalyticField& field, const Vec3& p) {
  constexpr double pi = std::numbers::pi;
  const double w0 = parameter(field, "w0");
  return {-pi * std::sin(pi * p.x) * std::cos(pi * p.y), pi * std::cos(pi * p.x) * std::sin(pi * p.y),
          w0 * std::sin(pi * p.z) * std::sin(pi * p.x)};
}

Vec3 toroidal(const AnalyticField& field, const Vec3& p) {
  const double major = parameter(field, "R0");
  const double kappa = parameter(field, "kappa");
  const double dx = p.x - 0.5;
  const double dy = p.y - 0.5;
  const double dz = p.z - 0.5;
  const double rho = std::max(std::hypot(dx, dy), 1e-6);
  const double minor = std::max(std::hypot(rho - major, dz), 1e-6);
  const Vec3 tangential{-dy / rho, dx / rho, 0.0};
  const Vec3 poloidal{-dz * dx / rho, -dz * dy / rho, rho - major};
  return tangential + (kappa / minor) * poloidal;
}

}  // namespace

bool in_unit_cube(const Vec3& p) {
  return p.x >= 0.0 && p.x <= 1.0 && p.y >= 0.0 && p.y <= 1.0 && p.z >= 0.0 && p.z <= 1.0;
}

Vec3 evaluate_field(const AnalyticField& field, const Vec3& p) {
  if (!in_unit_cube(p)) throw DomainError("field evaluated outside the unit cube");
  switch (field.kind) {
    case FieldKind::abc:
      return abc(field, p);
    case FieldKind::jets:
      return jets(field, p);
    case FieldKind::toroidal:
      return toroidal(field, p);
  }
  throw DomainError("unknown field kind");
}

FieldFunction as_function(const AnalyticField& field) {
  return [field](const Vec3& p) { return evaluate_field(field, p); };
}

Block::Block(Int3 resolution, Int3 origin, Int3 core_dims, std::vector<Vec3> data)
    : resolution_(resolution),
      origin_(origin),
      core_dims_(core_dims),
      padded_dims_(core_dims + uniform3(2 * kGhost)),
      data_(std::move(data)) {
  for (int a = 0; a < 3; ++a) {
    if (resolution_[a] < 2) throw ConfigError("global resolution must be at least 2 per axis");
    if (core_dims_[a] <= 0) throw ConfigError("block core dims must be positive");
    if (origin_[a] < 0 || origin_[a] + core_dims_[a] > resolution_[a])
      throw ConfigError("block extent exceeds the global lattice");
    spacing_[a] = 1.0 / static_cast<double>(resolution_[a] - 1);
  }
  if (static_cast<std::int64_t>(data_.size()) != padded_dims_.product())
    throw InvariantViolation("block data length does not match padded dims");
}

const Vec3& Block::node(std::int64_t i, std::int64_t j, std::int64_t k) const {
  const std::int64_t li = i - origin_.x + kGhost;
  const std::int64_t lj = j - origin_.y + kGhost;
  const std::int64_t lk = k - origin_.z + kGhost;
  return data_[static_cast<std::size_t>(li + padded_dims_.x * (lj + padded_dims_.y * lk))];
}

double lattice_coordinate(const Block& block, const Vec3& p, int axis) {
  return lattice_coordinate(p[axis], block.resolution()[axis]);
}

double lattice_coordinate(double position, std::int64_t resolution) {
  const double g = position * static_cast<double>(resolution - 1);
  const double nearest = std::nearbyint(g);
  if (std::abs(g - nearest) <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(g)))
    return nearest;
  return g;
}

std::int64_t owning_voxel(double lattice_coord, std::int64_t resolution) {
  const auto voxel = static_cast<std::int64_t>(std::floor(lattice_coord + 0.5));
  return std::clamp<std::int64_t>(voxel, 0, resolution - 1);
}

bool Block::core_contains(const Vec3& p) const {
  for (int a = 0; a < 3; ++a) {
    const double g = lattice_coordinate(*this, p, a);
    if (!std::isfinite(g)) return false;
    const std::int64_t voxel = owning_voxel(g, resolution_[a]);
    if (voxel < origin_[a] || voxel >= origin_[a] + core_dims_[a]) return false;
  }
  return true;
}

namespace {

struct Stencil {
  std::int64_t cell[3];
  double frac[3];
};

// Cells usable for interpolation span [origin - 1, origin + core - 1]. A point sitting exactly on the
// far ghost node is folded into the last usable cell with weight 1, which yields the same value.
std::optional<Stencil> stencil(const Block& block, const Vec3& p) {
  Stencil s{};
  for (int a = 0; a < 3; ++a) {
    const double g = lattice_coordinate(block, p, a);
    if (!std::isfinite(g)) return std::nullopt;
    const double base = std::floor(g);
    auto cell = static_cast<std::int64_t>(base);
    double frac = g - base;
    const std::int64_t lo = block.origin()[a] - Block::kGhost;
    const std::int64_t hi = block.origin()[a] + block.core_dims()[a] - 1;
    if (cell == hi + 1 && frac == 0.0) {
      cell = hi;
      frac = 1.0;
    }
    if (cell < lo || cell > hi) return std::nullopt;
    s.cell[a] = cell;
    s.frac[a] = frac;
  }
  return s;
}

inline Vec3 lerp(const Vec3& a, const Vec3& b, double t) { return (1.0 - t) * a + t * b; }

}  // namespace

bool Block::can_sample(const Vec3& p) const { return stencil(*this, p).has_value(); }

std::optional<Vec3> try_sample_trilinear(const Block& block, const Vec3& p) {
  const auto s = stencil(block, p);
  if (!s) return std::nullopt;
  const auto [i, j, k] = s->cell;
  const auto [fx, fy, fz] = s->frac;
  const Vec3 c00 = lerp(block.node(i, j, k), block.node(i + 1, j, k), fx);
  const Vec3 c10 = lerp(block.node(i, j + 1, k), block.node(i + 1, j + 1, k), fx);
  const Vec3 c01 = lerp(block.node(i, j, k + 1), block.node(i + 1, j, k + 1), fx);
  const Vec3 c11 = lerp(block.node(i, j + 1, k + 1), block.node(i + 1, j + 1, k + 1), fx);
  return lerp(lerp(c00, c10, fy), lerp(c01, c11, fy), fz);
}

Vec3 sample_trilinear(const Block& block, const Vec3& p) {
  if (auto v = try_sample_trilinear(block, p)) return *v;
  throw OutOfBlockError("sample point outside the block's ghost-expanded extent");
}

Block rasterize_block(const FieldFunction& field, Int3 global_resolution, Int3 origin_voxel, Int3 core_dims) {
  for (int a = 0; a < 3; ++a) {
    if (core_dims[a] <= 0) throw ConfigError("rasterize_block: zero-sized core dims");
    if (global_resolution[a] < 2) throw ConfigError("rasterize_block: resolution must be >= 2 per axis");
    if (origin_voxel[a] < 0 || origin_voxel[a] + core_dims[a] > global_resolution[a])
      throw ConfigError("rasterize_block: block extent exceeds the global lattice");
  }
  const Int3 padded = core_dims + uniform3(2 * Block::kGhost);
  std::vector<Vec3> data;
  data.reserve(static_cast<std::size_t>(padded.product()));
  auto coordinate = [&](std::int64_t local, int axis) {
    const std::int64_t global =
        std::clamp<std::int64_t>(origin_voxel[axis] + local - Block::kGhost, 0, global_resolution[axis] - 1);
    return static_cast<double>(global) / static_cast<double>(global_resolution[axis] - 1);
  };
  for (std::int64_t k = 0; k < padded.z; ++k)
    for (std::int64_t j = 0; j < padded.y; ++j)
      for (std::int64_t i = 0; i < padded.x; ++i)
        data.push_back(field(Vec3{coordinate(i, 0), coordinate(j, 1), coordinate(k, 2)}));
  return Block(global_resolution, origin_voxel, core_dims, std::move(data));
}

Block rasterize_block(const AnalyticField& field, Int3 global_resolution, Int3 origin_voxel, Int3 core_dims) {
  return rasterize_block(as_function(field), global_resolution, origin_voxel, core_dims);
}

void export_block(const Block& block, const std::filesystem::path& stem) {
  std::ofstream raw(std::filesystem::path(stem).concat(".raw"), std::ios::binary);
  if (!raw) throw std::runtime_error("cannot open " + stem.string() + ".raw for writing");
  for (const Vec3& v : block.data()) {
    for (int a = 0; a < 3; ++a) {
      auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v[a]));
      if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
      raw.write(reinterpret_cast<const char*>(&bits), sizeof bits);
    }
  }
  const auto triple = [](const auto& t) { return nlohmann::json::array({t[0], t[1], t[2]}); };
  nlohmann::json sidecar{
      {"dims", triple(block.padded_dims())},     {"core_dims", triple(block.core_dims())},
      {"origin", triple(block.origin())},        {"ghost", Block::kGhost},
      {"spacing", triple(block.spacing())},      {"resolution", triple(block.resolution())},
      {"layout", "float32 xyz, x fastest, little-endian"}};
  std::ofstream json(std::filesystem::path(stem).concat(".json"));
  json << sidecar.dump(2) << '\n';
}

}  // namespace padv
