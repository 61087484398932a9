#include "padvect/advect.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <limits>
#include <thread>

#include "json.hpp"

#include "padvect/errors.hpp"

namespace padv {

std::optional<Direction> exit_direction(const Block& block, const Vec3& p) {
  std::array<double, 3> g{};
  for (int a = 0; a < 3; ++a) g[a] = lattice_coordinate(block, p, a);
  return dominant_exit(g, block.origin(), block.origin() + block.core_dims(), block.resolution());
}

StepResult rk4_step(const Block& block, const Vec3& p, double h) {
  const auto k1 = try_sample_trilinear(block, p);
  if (!k1) throw InvariantViolation("rk4_step: start point is not sampleable in its block");

  auto stage = [&](const Vec3& q) -> std::optional<Vec3> { return try_sample_trilinear(block, q); };
  auto rejected = [&](const Vec3& q) {
    return StepResult{StepStatus::rejected, p, exit_direction(block, q)};
  };

  const Vec3 q2 = p + (0.5 * h) * *k1;
  const auto k2 = stage(q2);
  if (!k2) return rejected(q2);
  const Vec3 q3 = p + (0.5 * h) * *k2;
  const auto k3 = stage(q3);
  if (!k3) return rejected(q3);
  const Vec3 q4 = p + h * *k3;
  const auto k4 = stage(q4);
  if (!k4) return rejected(q4);

  const Vec3 next = p + (h / 6.0) * (*k1 + 2.0 * *k2 + 2.0 * *k3 + *k4);
  if (!in_unit_cube(next)) return {StepStatus::exit_domain, next, std::nullopt};
  if (block.core_contains(next)) return {StepStatus::inside, next, std::nullopt};
  return {StepStatus::exit_block, next, exit_direction(block, next)};
}

RoundInfo compute_round_info(std::span<const Particle> queue, std::size_t particles_per_round) {
  RoundInfo info;
  info.count = std::min(queue.size(), particles_per_round);
  std::int32_t longest = 0;
  for (std::size_t i = 0; i < info.count; ++i) longest = std::max(longest, queue[i].remaining_iterations);
  info.vertex_stride = static_cast<std::size_t>(longest) + 1;
  info.offsets.resize(info.count);
  for (std::size_t i = 0; i < info.count; ++i) info.offsets[i] = i * info.vertex_stride;
  info.oob.assign(info.count, std::nullopt);
  return info;
}

Vec3 CurveStore::sentinel() {
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  return {nan, nan, nan};
}

void CurveStore::allocate(const RoundInfo& info, std::span<const Particle> selected) {
  if (selected.size() != info.count) throw InvariantViolation("CurveStore::allocate: selection size mismatch");
  const std::size_t capacity = info.count * info.vertex_stride;
  vertices_.assign(capacity, sentinel());
  set_.assign(capacity, 0);
  records_.clear();
  records_.reserve(info.count);
  for (std::size_t i = 0; i < info.count; ++i) records_.push_back({selected[i].id, info.offsets[i], info.vertex_stride, 0});
}

void CurveStore::append(std::size_t particle_index, const Vec3& vertex) {
  Record& r = records_[particle_index];
  if (r.filled >= r.stride) throw InvariantViolation("CurveStore::append: curve slot overflow");
  const std::size_t slot = r.offset + r.filled++;
  vertices_[slot] = vertex;
  set_[slot] = 1;
}

std::vector<CurveSegment> CurveStore::prune() const {
  std::vector<CurveSegment> segments;
  segments.reserve(records_.size());
  for (const Record& r : records_) {
    CurveSegment seg{r.id, {}};
    for (std::size_t s = r.offset; s < r.offset + r.stride && set_[s]; ++s) seg.vertices.push_back(vertices_[s]);
    segments.push_back(std::move(seg));
  }
  return segments;
}

std::vector<CurveSegment> prune_curves(const CurveStore& store) { return store.prune(); }

const Block& BlockTable::containing_block(const Particle& p) const {
  if (!p.balanced_from) {
    if (p.home_rank != rank || own == nullptr)
      throw InvariantViolation("particle " + std::to_string(p.id) + " is not homed on rank " + std::to_string(rank));
    return *own;
  }
  const auto dir = neighborhood ? neighborhood->direction_to(*p.balanced_from) : std::nullopt;
  if (!dir || replicas[static_cast<std::size_t>(*dir)] == nullptr)
    throw InvariantViolation("rank " + std::to_string(rank) + " lacks the donor block of particle " + std::to_string(p.id));
  return *replicas[static_cast<std::size_t>(*dir)];
}

namespace {

Fate advance(const Block& block, Particle& particle, std::size_t index, RoundInfo& info, CurveStore& store, double h,
             std::uint64_t& steps) {
  if (!block.core_contains(particle.position))
    throw InvariantViolation("particle " + std::to_string(particle.id) + " is outside its containing block core");
  while (particle.remaining_iterations > 0) {
    const StepResult step = rk4_step(block, particle.position, h);
    switch (step.status) {
      case StepStatus::rejected:
        throw InvariantViolation("RK4 stage of particle " + std::to_string(particle.id) +
                                 " overran the ghost layer; step size too large for the lattice spacing");
      case StepStatus::exit_domain:
        particle.remaining_iterations = 0;
        return Fate::left_domain;
      case StepStatus::inside:
      case StepStatus::exit_block:
        particle.position = step.position;
        --particle.remaining_iterations;
        ++steps;
        store.append(index, step.position);
        if (step.status == StepStatus::exit_block && particle.remaining_iterations > 0) {
          info.oob[index] = step.direction;
          return Fate::exited_block;
        }
        break;
    }
  }
  return Fate::exhausted;
}

}  // namespace

IntegrateResult integrate(const BlockTable& blocks, RoundInfo& info, std::span<Particle> selected, CurveStore& store,
                          double h, int workers) {
  if (selected.size() != info.count) throw InvariantViolation("integrate: selection size mismatch");
  IntegrateResult result;
  result.fates.assign(info.count, Fate::exhausted);
  std::vector<const Block*> containing(info.count);
  for (std::size_t i = 0; i < info.count; ++i) containing[i] = &blocks.containing_block(selected[i]);

  const auto run_range = [&](std::size_t begin, std::size_t end, std::uint64_t& steps) {
    for (std::size_t i = begin; i < end; ++i)
      result.fates[i] = advance(*containing[i], selected[i], i, info, store, h, steps);
  };

  const std::size_t chunks = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), 1, std::max<std::size_t>(info.count, 1));
  if (chunks == 1) {
    run_range(0, info.count, result.steps);
    return result;
  }
  std::vector<std::uint64_t> steps(chunks, 0);
  std::vector<std::exception_ptr> errors(chunks);
  {
    std::vector<std::jthread> threads;
    for (std::size_t c = 0; c < chunks; ++c) {
      threads.emplace_back([&, c] {
        try {
          run_range(info.count * c / chunks, info.count * (c + 1) / chunks, steps[c]);
        } catch (...) {
          errors[c] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  for (auto s : steps) result.steps += s;
  return result;
}

namespace {

template <typename T>
void write_le(std::ofstream& out, T value) {
  using Bits = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  auto bits = std::bit_cast<Bits>(value);
  if constexpr (std::endian::native == std::endian::big) {
    if constexpr (sizeof(T) == 4) bits = __builtin_bswap32(bits); else bits = __builtin_bswap64(bits);
  }
  out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
}

template <typename T>
T read_le(std::ifstream& in) {
  using Bits = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  Bits bits{};
  in.read(reinterpret_cast<char*>(&bits), sizeof bits);
  if (!in) throw std::runtime_error("truncated line-set file");
  if constexpr (std::endian::native == std::endian::big) {
    if constexpr (sizeof(T) == 4) bits = __builtin_bswap32(bits); else bits = __builtin_bswap64(bits);
  }
  return std::bit_cast<T>(bits);
}

}  // namespace

void write_lineset(const std::filesystem::path& path, std::span<const Curve> curves, Precision precision) {
  nlohmann::json header;
  header["format"] = "padvect-lineset";
  header["version"] = 1;
  header["scalar"] = precision == Precision::float32 ? "float32" : "float64";
  header["particle_count"] = curves.size();
  auto& ids = header["ids"] = nlohmann::json::array();
  auto& counts = header["vertex_counts"] = nlohmann::json::array();
  for (const Curve& c : curves) {
    ids.push_back(c.id);
    counts.push_back(c.vertices.size());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << header.dump() << '\n';
  for (const Curve& c : curves)
    for (const Vec3& v : c.vertices)
      for (int a = 0; a < 3; ++a) {
        if (precision == Precision::float32)
          write_le(out, static_cast<float>(v[a]));
        else
          write_le(out, v[a]);
      }
}

std::vector<Curve> read_lineset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  const auto header = nlohmann::json::parse(line);
  if (header.value("format", "") != "padvect-lineset") throw std::runtime_error(path.string() + " is not a line-set file");
  const bool single = header.at("scalar") == "float32";
  const auto& ids = header.at("ids");
  const auto& counts = header.at("vertex_counts");
  std::vector<Curve> curves(ids.size());
  for (std::size_t i = 0; i < curves.size(); ++i) {
    curves[i].id = ids[i].get<std::uint64_t>();
    curves[i].vertices.resize(counts[i].get<std::size_t>());
    for (Vec3& v : curves[i].vertices)
      for (int a = 0; a < 3; ++a) v[a] = single ? static_cast<double>(read_le<float>(in)) : read_le<double>(in);
  }
  return curves;
}

}  // namespace padv
