#include "padvect/runtime.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <string>
#include <thread>

#include "padvect/errors.hpp"

namespace padv {

// ---------------------------------------------------------------------------------------------------------------------
// Seeding

int owner_rank(const ProcessGrid& grid, Int3 resolution, const Vec3& p) {
  Int3 coords;
  for (int a = 0; a < 3; ++a) {
    const std::int64_t voxel = owning_voxel(lattice_coordinate(p[a], resolution[a]), resolution[a]);
    for (std::int64_t b = 0; b < grid.dims[a]; ++b) {
      const auto [origin, size] = split_axis(resolution[a], grid.dims[a], b);
      if (voxel >= origin && voxel < origin + size) {
        coords[a] = b;
        break;
      }
    }
  }
  return coords_to_rank(grid, coords);
}

std::vector<std::vector<Particle>> seed_particles(const ProcessGrid& grid, Int3 resolution, const SeedSpec& seeds,
                                                  std::int32_t max_iterations) {
  if (!(seeds.aabb_scale > 0.0) || seeds.aabb_scale > 1.0) throw ConfigError("AABB scale must lie in (0, 1]");
  for (int a = 0; a < 3; ++a)
    if (seeds.stride[a] < 1) throw ConfigError("seed stride must be a positive integer triple");
  const double lo = 0.5 - 0.5 * seeds.aabb_scale;
  const double hi = 0.5 + 0.5 * seeds.aabb_scale;
  const auto position = [&](std::int64_t i, int axis) {
    return static_cast<double>(i) / static_cast<double>(resolution[axis] - 1);
  };
  const auto inside = [&](double x) { return x >= lo && x <= hi; };

  std::vector<std::vector<Particle>> queues(static_cast<std::size_t>(grid.rank_count()));
  std::uint64_t next_id = 0;
  for (std::int64_t k = 0; k < resolution.z; k += seeds.stride.z) {
    if (!inside(position(k, 2))) continue;
    for (std::int64_t j = 0; j < resolution.y; j += seeds.stride.y) {
      if (!inside(position(j, 1))) continue;
      for (std::int64_t i = 0; i < resolution.x; i += seeds.stride.x) {
        if (!inside(position(i, 0))) continue;
        const Vec3 p{position(i, 0), position(j, 1), position(k, 2)};
        const int owner = owner_rank(grid, resolution, p);
        queues[static_cast<std::size_t>(owner)].push_back(Particle{next_id++, p, max_iterations, owner, std::nullopt});
      }
    }
  }
  return queues;
}

std::vector<std::vector<Particle>> seed_points(const ProcessGrid& grid, Int3 resolution, std::span<const Vec3> points,
                                               std::int32_t max_iterations) {
  std::vector<std::vector<Particle>> queues(static_cast<std::size_t>(grid.rank_count()));
  std::uint64_t next_id = 0;
  for (const Vec3& p : points) {
    if (!in_unit_cube(p)) throw ConfigError("seed point outside the unit cube");
    const int owner = owner_rank(grid, resolution, p);
    queues[static_cast<std::size_t>(owner)].push_back(Particle{next_id++, p, max_iterations, owner, std::nullopt});
  }
  return queues;
}

// ---------------------------------------------------------------------------------------------------------------------
// Mailbox channels

template <typename Payload>
void Channel<Payload>::post(int from, int to, Payload payload) {
  if (!(*neighborhoods_)[static_cast<std::size_t>(from)].index_of(to))
    throw InvariantViolation("message from rank " + std::to_string(from) + " to non-neighbor " + std::to_string(to));
  outbox_[static_cast<std::size_t>(from)].emplace_back(to, std::move(payload));
}

template <typename Payload>
void Channel<Payload>::deliver() {
  for (std::size_t from = 0; from < outbox_.size(); ++from) {
    for (auto& [to, payload] : outbox_[from])
      inbox_[static_cast<std::size_t>(to)].push_back(Envelope{static_cast<int>(from), round_, std::move(payload)});
    outbox_[from].clear();
  }
}

template <typename Payload>
bool Channel<Payload>::idle() const {
  for (const auto& box : outbox_)
    if (!box.empty()) return false;
  for (const auto& box : inbox_)
    if (!box.empty()) return false;
  return true;
}

template class Channel<Load>;
template class Channel<std::vector<Particle>>;
template class Channel<CollectMessage>;
template class Channel<std::vector<Transit>>;

// ---------------------------------------------------------------------------------------------------------------------
// Ranks

BlockTable RankState::block_table() const {
  BlockTable table;
  table.rank = rank;
  table.neighborhood = &neighborhood;
  table.own = own_block.get();
  for (std::size_t d = 0; d < replicas.size(); ++d) table.replicas[d] = replicas[d].get();
  return table;
}

Simulation::Simulation(SimulationSetup setup) : setup_(std::move(setup)) {
  if (!setup_.field) throw ConfigError("simulation needs a vector field");
  if (!(setup_.step > 0.0)) throw ConfigError("step size must be positive");
  if (setup_.max_iterations < 0) throw ConfigError("max_iterations must be non-negative");
  if (setup_.particles_per_round < 1) throw ConfigError("particles_per_round must be >= 1");

  const auto extents = decompose(setup_.grid, setup_.resolution);
  const auto rank_count = static_cast<int>(setup_.grid.rank_count());

  std::vector<std::shared_ptr<const Block>> blocks;
  blocks.reserve(extents.size());
  for (const auto& e : extents)
    blocks.push_back(std::make_shared<const Block>(
        rasterize_block(setup_.field, setup_.resolution, e.core.origin, e.core.dims)));

  auto queues = setup_.seed_points.empty()
                    ? seed_particles(setup_.grid, setup_.resolution, setup_.seeds, setup_.max_iterations)
                    : seed_points(setup_.grid, setup_.resolution, setup_.seed_points, setup_.max_iterations);
  ranks_.resize(static_cast<std::size_t>(rank_count));
  for (int r = 0; r < rank_count; ++r) {
    RankState& rs = ranks_[static_cast<std::size_t>(r)];
    rs.rank = r;
    rs.neighborhood = neighborhood_of(setup_.grid, r);
    neighborhoods_.push_back(rs.neighborhood);
    rs.own_block = blocks[static_cast<std::size_t>(r)];
    for (const auto& [dir, nr] : rs.neighborhood.neighbors)
      rs.replicas[static_cast<std::size_t>(dir)] = blocks[static_cast<std::size_t>(nr)];
    rs.queue = std::move(queues[static_cast<std::size_t>(r)]);
    tally_.seeds += rs.queue.size();
  }
  tally_.active = tally_.seeds;

  order_ = setup_.rank_order;
  if (order_.empty()) {
    order_.resize(static_cast<std::size_t>(rank_count));
    std::iota(order_.begin(), order_.end(), 0);
  }
  std::vector<int> sorted = order_;
  std::sort(sorted.begin(), sorted.end());
  for (int r = 0; r < rank_count; ++r)
    if (sorted.size() != static_cast<std::size_t>(rank_count) || sorted[static_cast<std::size_t>(r)] != r)
      throw ConfigError("rank_order must be a permutation of all ranks");
  check_containability();
}

template <typename Fn>
void Simulation::for_each_rank(Fn&& fn) {
  const std::size_t workers = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(setup_.workers, 1)), 1, order_.size());
  if (workers == 1) {
    for (int r : order_) fn(ranks_[static_cast<std::size_t>(r)]);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> threads;
    for (std::size_t w = 0; w < workers; ++w) {
      threads.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < order_.size(); i += workers) fn(ranks_[static_cast<std::size_t>(order_[i])]);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

bool Simulation::check_completion() const {
  // Gather of active counts followed by a broadcast of "all zero".
  std::uint64_t active = 0;
  for (const auto& rs : ranks_) active += rs.queue.size();
  return active == 0;
}

void Simulation::check_containability() const {
  for (const auto& rs : ranks_) {
    const BlockTable table = rs.block_table();
    for (const Particle& p : rs.queue) {
      if (!p.balanced_from && p.home_rank != rs.rank)
        throw InvariantViolation("rank " + std::to_string(rs.rank) + " queues foreign particle " + std::to_string(p.id));
      if (!table.containing_block(p).core_contains(p.position))
        throw InvariantViolation("particle " + std::to_string(p.id) + " on rank " + std::to_string(rs.rank) +
                                 " lies outside its containing block");
    }
  }
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void append_sorted_by_id(std::vector<Particle>& queue, std::vector<Particle> incoming) {
  std::sort(incoming.begin(), incoming.end(), [](const Particle& a, const Particle& b) { return a.id < b.id; });
  queue.insert(queue.end(), std::make_move_iterator(incoming.begin()), std::make_move_iterator(incoming.end()));
}

constexpr int kMaxOobHops = 3;

}  // namespace

std::vector<RoundRecord> Simulation::run_round() {
  if (check_completion()) throw InvariantViolation("run_round called after completion");
  const std::size_t n = ranks_.size();
  std::vector<RoundRecord> records(n);
  for (std::size_t r = 0; r < n; ++r) {
    records[r].round = round_;
    records[r].rank = static_cast<int>(r);
  }
  auto record = [&](const RankState& rs) -> RoundRecord& { return records[static_cast<std::size_t>(rs.rank)]; };
  auto timed = [&](Stage stage, auto&& body) {
    for_each_rank([&](RankState& rs) {
      const auto start = Clock::now();
      body(rs);
      record(rs).stage(stage) += seconds_since(start);
    });
  };

  // (1) load exchange
  std::vector<LoadVector> loads(n);
  Channel<Load> load_channel(&neighborhoods_, round_);
  timed(Stage::lb_distribute, [&](RankState& rs) {
    record(rs).load_pre = rs.queue.size();
    if (setup_.scheduler == SchedulerKind::none) return;
    for (const auto& [dir, nr] : rs.neighborhood.neighbors) load_channel.post(rs.rank, nr, rs.queue.size());
  });
  load_channel.deliver();
  timed(Stage::lb_distribute, [&](RankState& rs) {
    LoadVector& lv = loads[static_cast<std::size_t>(rs.rank)];
    lv.local = rs.queue.size();
    lv.per_neighbor.assign(rs.neighborhood.size(), 0);
    for (auto& env : load_channel.inbox(rs.rank)) lv.per_neighbor[*rs.neighborhood.index_of(env.from)] = env.payload;
    load_channel.inbox(rs.rank).clear();
  });

  // (2) quota gather, GL-LMA only
  std::vector<std::vector<Load>> granted(n);
  if (setup_.scheduler == SchedulerKind::gllma) {
    Channel<Load> quota_channel(&neighborhoods_, round_);
    timed(Stage::lb_distribute, [&](RankState& rs) {
      const auto quotas = quota_offer(loads[static_cast<std::size_t>(rs.rank)]);
      for (std::size_t i = 0; i < quotas.size(); ++i) quota_channel.post(rs.rank, rs.neighborhood.neighbors[i].second, quotas[i]);
    });
    quota_channel.deliver();
    timed(Stage::lb_distribute, [&](RankState& rs) {
      auto& g = granted[static_cast<std::size_t>(rs.rank)];
      g.assign(rs.neighborhood.size(), 0);
      for (auto& env : quota_channel.inbox(rs.rank)) g[*rs.neighborhood.index_of(env.from)] = env.payload;
      quota_channel.inbox(rs.rank).clear();
    });
  }

  // (3) decision and particle transfer
  Channel<std::vector<Particle>> balance_channel(&neighborhoods_, round_);
  timed(Stage::lb_distribute, [&](RankState& rs) {
    if (setup_.scheduler == SchedulerKind::none) return;
    const auto& lv = loads[static_cast<std::size_t>(rs.rank)];
    const BalanceDecision decision =
        decide(setup_.scheduler, lv, setup_.balance, &granted[static_cast<std::size_t>(rs.rank)]);
    auto lists = select_particles(rs.queue, decision, rs.rank);
    for (std::size_t i = 0; i < lists.size(); ++i) {
      if (lists[i].empty()) continue;
      const int to = rs.neighborhood.neighbors[i].second;
      auto& ledger = rs.loaned_out[to];
      for (const Particle& p : lists[i]) ledger.push_back(p.id);
      record(rs).sent_balanced += lists[i].size();
      balance_channel.post(rs.rank, to, std::move(lists[i]));
    }
  });
  balance_channel.deliver();
  timed(Stage::lb_distribute, [&](RankState& rs) {
    std::vector<Particle> incoming;
    for (auto& env : balance_channel.inbox(rs.rank))
      incoming.insert(incoming.end(), env.payload.begin(), env.payload.end());
    balance_channel.inbox(rs.rank).clear();
    record(rs).recv_balanced = incoming.size();
    append_sorted_by_id(rs.queue, std::move(incoming));
    record(rs).load_post = rs.queue.size();
  });
  check_containability();

  // (4)-(6) round info, allocation, integration
  std::vector<RoundInfo> infos(n);
  timed(Stage::round_info, [&](RankState& rs) {
    infos[static_cast<std::size_t>(rs.rank)] = compute_round_info(rs.queue, setup_.particles_per_round);
  });
  timed(Stage::alloc, [&](RankState& rs) {
    const RoundInfo& info = infos[static_cast<std::size_t>(rs.rank)];
    rs.curve_store.allocate(info, std::span<const Particle>(rs.queue.data(), info.count));
  });
  // Loans that terminated on the borrower, reported back to the donor at collect.
  std::vector<std::map<int, std::vector<std::uint64_t>>> finished_loans(n);
  std::vector<std::uint64_t> terminated(n, 0);
  std::vector<std::uint64_t> exited(n, 0);
  timed(Stage::integrate, [&](RankState& rs) {
    const auto r = static_cast<std::size_t>(rs.rank);
    RoundInfo& info = infos[r];
    std::span<Particle> selected(rs.queue.data(), info.count);
    const IntegrateResult result = integrate(rs.block_table(), info, selected, rs.curve_store, setup_.step);
    record(rs).integrate_steps = result.steps;
    if (setup_.record_curves)
      for (auto& seg : rs.curve_store.prune())
        if (!seg.vertices.empty()) rs.curve_log.push_back({round_, std::move(seg)});
    for (std::size_t i = 0; i < info.count; ++i) {
      const Particle& p = selected[i];
      if (result.fates[i] == Fate::exited_block) {
        rs.pending_oob.push_back(Transit{p, info.oob[i]});
        continue;
      }
      ++(result.fates[i] == Fate::exhausted ? terminated : exited)[r];
      if (p.balanced_from) finished_loans[r][*p.balanced_from].push_back(p.id);
    }
    rs.queue.erase(rs.queue.begin(), rs.queue.begin() + static_cast<std::ptrdiff_t>(info.count));
  });
  assign_idle(records);

  // (7) collect: every surviving loan goes back to its donor, terminated loans are reported
  Channel<CollectMessage> collect_channel(&neighborhoods_, round_);
  timed(Stage::collect, [&](RankState& rs) {
    std::map<int, CollectMessage> messages;
    for (auto& [donor, ids] : finished_loans[static_cast<std::size_t>(rs.rank)])
      messages[donor].finished_ids = std::move(ids);
    std::vector<Transit> own_oob;
    for (auto& t : rs.pending_oob) {
      if (t.particle.balanced_from)
        messages[*t.particle.balanced_from].returned.push_back(std::move(t));
      else
        own_oob.push_back(std::move(t));
    }
    rs.pending_oob = std::move(own_oob);
    std::vector<Particle> own_queue;
    for (auto& p : rs.queue) {
      if (p.balanced_from)
        messages[*p.balanced_from].returned.push_back(Transit{p, std::nullopt});
      else
        own_queue.push_back(p);
    }
    rs.queue = std::move(own_queue);
    for (auto& [donor, msg] : messages) collect_channel.post(rs.rank, donor, std::move(msg));
  });
  collect_channel.deliver();
  timed(Stage::collect, [&](RankState& rs) {
    std::vector<Particle> resumed;
    std::vector<Transit> exits;
    for (auto& env : collect_channel.inbox(rs.rank)) {
      auto& ledger = rs.loaned_out[env.from];
      const auto settle = [&](std::uint64_t id) {
        auto it = std::find(ledger.begin(), ledger.end(), id);
        if (it == ledger.end())
          throw InvariantViolation("rank " + std::to_string(env.from) + " returned unknown loan " + std::to_string(id));
        ledger.erase(it);
      };
      for (std::uint64_t id : env.payload.finished_ids) settle(id);
      for (Transit& t : env.payload.returned) {
        settle(t.particle.id);
        t.particle.balanced_from.reset();
        if (t.exit)
          exits.push_back(std::move(t));
        else
          resumed.push_back(t.particle);
      }
    }
    collect_channel.inbox(rs.rank).clear();
    for (const auto& [neighbor, ledger] : rs.loaned_out)
      if (!ledger.empty())
        throw InvariantViolation("rank " + std::to_string(rs.rank) + " still has loans at rank " + std::to_string(neighbor));
    rs.loaned_out.clear();
    append_sorted_by_id(rs.queue, std::move(resumed));
    std::sort(exits.begin(), exits.end(), [](const Transit& a, const Transit& b) { return a.particle.id < b.particle.id; });
    rs.pending_oob.insert(rs.pending_oob.end(), std::make_move_iterator(exits.begin()), std::make_move_iterator(exits.end()));
  });

  // (8) out-of-bounds distribution; corner exits take extra face hops
  for (int hop = 0;; ++hop) {
    bool any = false;
    for (const auto& rs : ranks_) any = any || !rs.pending_oob.empty();
    if (!any) break;
    if (hop >= kMaxOobHops) throw InvariantViolation("out-of-bounds routing did not settle within three hops");
    Channel<std::vector<Transit>> oob_channel(&neighborhoods_, round_);
    timed(Stage::oob, [&](RankState& rs) {
      std::map<int, std::vector<Transit>> outgoing;
      for (Transit& t : rs.pending_oob) {
        const auto target = route_out_of_bounds(rs.neighborhood, *t.exit);
        if (!target) {
          ++exited[static_cast<std::size_t>(rs.rank)];
          continue;
        }
        t.particle.home_rank = *target;
        outgoing[*target].push_back(std::move(t));
      }
      rs.pending_oob.clear();
      for (auto& [to, batch] : outgoing) {
        record(rs).sent_oob += batch.size();
        oob_channel.post(rs.rank, to, std::move(batch));
      }
    });
    oob_channel.deliver();
    timed(Stage::oob, [&](RankState& rs) {
      std::vector<Particle> arrived;
      for (auto& env : oob_channel.inbox(rs.rank))
        for (Transit& t : env.payload) {
          ++record(rs).recv_oob;
          if (rs.own_block->core_contains(t.particle.position)) {
            arrived.push_back(t.particle);
          } else {
            t.exit = exit_direction(*rs.own_block, t.particle.position);
            if (!t.exit) throw InvariantViolation("re-routed particle has no exit face");
            rs.pending_oob.push_back(std::move(t));
          }
        }
      oob_channel.inbox(rs.rank).clear();
      append_sorted_by_id(rs.queue, std::move(arrived));
      std::sort(rs.pending_oob.begin(), rs.pending_oob.end(),
                [](const Transit& a, const Transit& b) { return a.particle.id < b.particle.id; });
    });
  }
  check_containability();

  // Conservation: seeds = active + terminated + exited.
  std::uint64_t active = 0;
  for (const auto& rs : ranks_) active += rs.queue.size();
  std::uint64_t steps = 0;
  for (std::size_t r = 0; r < n; ++r) {
    tally_.terminated += terminated[r];
    tally_.exited += exited[r];
    steps += records[r].integrate_steps;
  }
  tally_.active = active;
  tally_.round = round_;
  total_steps_ += steps;
  if (!tally_.conserved())
    throw InvariantViolation("particle conservation broken in round " + std::to_string(round_));
  ++round_;
  return records;
}

RunResult Simulation::run() {
  RunResult result;
  result.seeds = tally_.seeds;
  while (!check_completion()) {
    if (round_ >= setup_.round_cap)
      throw RoundCapExceeded("round cap of " + std::to_string(setup_.round_cap) + " exceeded with " +
                             std::to_string(tally_.active) + " particles still active");
    result.rounds.push_back(run_round());
    result.tallies.push_back(tally_);
  }
  result.total_steps = total_steps_;
  result.curves = merged_curves();
  return result;
}

std::vector<Curve> Simulation::merged_curves() const {
  std::vector<const RankState::LoggedSegment*> all;
  for (const auto& rs : ranks_)
    for (const auto& seg : rs.curve_log) all.push_back(&seg);
  std::sort(all.begin(), all.end(), [](const auto* a, const auto* b) {
    return a->segment.id != b->segment.id ? a->segment.id < b->segment.id : a->round < b->round;
  });
  std::vector<Curve> curves;
  for (const auto* seg : all) {
    if (curves.empty() || curves.back().id != seg->segment.id) curves.push_back(Curve{seg->segment.id, {}});
    auto& v = curves.back().vertices;
    v.insert(v.end(), seg->segment.vertices.begin(), seg->segment.vertices.end());
  }
  return curves;
}

}  // namespace padv
