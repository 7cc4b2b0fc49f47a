// Copyright 2026 The lineplan Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Experimental instances: seeded grid networks with line pools sharing a
// first edge, utility scenarios, capacity disruptions and cold-vs-warm
// recovery runs.

#ifndef LINEPLAN_SCENARIO_HPP
#define LINEPLAN_SCENARIO_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <string_view>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "lineplan/error.hpp"
#include "lineplan/multi_pool.hpp"
#include "lineplan/network.hpp"
#include "lineplan/oracle.hpp"
#include "lineplan/rng.hpp"
#include "lineplan/utility.hpp"

namespace lineplan {

struct GridPoint {
  int x = 0;  // column
  int y = 0;  // row
  bool operator==(const GridPoint&) const = default;
};

struct GridSpec {
  int rows = 7;
  int cols = 12;
  double capacity_lo = 10.0;
  double capacity_hi = 110.0;
  int lines_per_pool = 10;
  int pools = 1;
  GridPoint shared_from{0, 3};
  GridPoint shared_to{1, 3};
  // When set, pools after the first are copies of the first with this
  // fraction of lines resampled; otherwise every pool is drawn independently.
  std::optional<double> perturb_fraction;
  std::uint64_t seed = 1;
};

inline std::string grid_node_id(GridPoint p) {
  return "(" + std::to_string(p.x) + "," + std::to_string(p.y) + ")";
}

inline std::string grid_edge_id(GridPoint a, GridPoint b) {
  return grid_node_id(a) + "-" + grid_node_id(b);
}

inline void validate_grid_spec(const GridSpec& spec) {
  if (spec.rows < 2 || spec.cols < 2) throw InputError("grid needs rows, cols >= 2");
  if (!(spec.capacity_lo > 0.0) || !(spec.capacity_lo < spec.capacity_hi)) {
    throw InputError("capacity range must satisfy 0 < lo < hi");
  }
  if (spec.lines_per_pool < 1 || spec.pools < 1) {
    throw InputError("grid needs at least one pool and one line per pool");
  }
  auto inside = [&](GridPoint p) {
    return p.x >= 0 && p.y >= 0 && p.x < spec.cols && p.y < spec.rows;
  };
  const GridPoint a = spec.shared_from;
  const GridPoint b = spec.shared_to;
  const bool right = b.x == a.x + 1 && b.y == a.y;
  const bool down = b.x == a.x && b.y == a.y + 1;
  if (!inside(a) || !inside(b) || !(right || down)) {
    throw InputError("shared first edge " + grid_edge_id(a, b) +
                     " is not an edge of the grid");
  }
  if (spec.perturb_fraction &&
      (*spec.perturb_fraction < 0.0 || *spec.perturb_fraction > 1.0)) {
    throw InputError("perturb fraction must lie in [0, 1]");
  }
}

namespace detail {

// Monotone (right/down) lattice path starting with the shared edge and
// ending at a random column at least two steps further right.
inline Line random_grid_line(const GridSpec& spec, Rng& rng) {
  Line line;
  GridPoint cur = spec.shared_to;
  line.edges.push_back(grid_edge_id(spec.shared_from, cur));
  auto step = [&](GridPoint next) {
    line.edges.push_back(grid_edge_id(cur, next));
    cur = next;
  };
  if (cur.x < spec.cols - 1) {
    const int lo = std::min(cur.x + 2, spec.cols - 1);
    const int target =
        lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.cols - lo)));
    while (cur.x < target) {
      if (cur.y < spec.rows - 1 && rng.coin()) {
        step({cur.x, cur.y + 1});
      } else {
        step({cur.x + 1, cur.y});
      }
    }
  } else {
    const int room = spec.rows - 1 - cur.y;
    const int drop =
        room > 0 ? 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(room))) : 0;
    for (int i = 0; i < drop; ++i) step({cur.x, cur.y + 1});
  }
  return line;
}

inline std::string lop_name(int i) { return "lop" + std::to_string(i); }
inline std::string pool_name(int k) { return "pool" + std::to_string(k); }

}  // namespace detail

// Replaces ceil(fraction * |lines|) randomly chosen lines of pool k by fresh
// lines that differ from the ones they replace.
inline PoolSystem perturb_pool(const GridSpec& spec, const PoolSystem& pools,
                               std::size_t k, double fraction,
                               std::uint64_t seed) {
  if (fraction < 0.0 || fraction > 1.0) {
    throw InputError("perturb fraction must lie in [0, 1]");
  }
  if (k >= pools.num_pools()) throw InputError("pool index out of range");
  std::vector<Pool> out = pools.pools();
  Pool& pool = out[k];
  const std::size_t n = pool.lines.size();
  const auto count = static_cast<std::size_t>(
      std::ceil(fraction * static_cast<double>(n) - 1e-9));
  Rng rng(derive_seed(seed, "perturb/" + pool.id));
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  for (std::size_t j = 0; j < std::min(count, n); ++j) {
    Line& target = pool.lines[order[j]].line;
    Line fresh = detail::random_grid_line(spec, rng);
    for (int attempt = 0; fresh == target && attempt < 64; ++attempt) {
      fresh = detail::random_grid_line(spec, rng);
    }
    target = std::move(fresh);
  }
  return PoolSystem(std::move(out));
}

inline std::pair<Network, PoolSystem> generate_grid(const GridSpec& spec) {
  validate_grid_spec(spec);
  std::vector<std::string> nodes;
  for (int y = 0; y < spec.rows; ++y) {
    for (int x = 0; x < spec.cols; ++x) nodes.push_back(grid_node_id({x, y}));
  }
  Rng cap_rng(derive_seed(spec.seed, "capacity"));
  std::vector<Edge> edges;
  for (int y = 0; y < spec.rows; ++y) {
    for (int x = 0; x < spec.cols; ++x) {
      if (x + 1 < spec.cols) {
        edges.push_back({grid_edge_id({x, y}, {x + 1, y}), grid_node_id({x, y}),
                         grid_node_id({x + 1, y}),
                         cap_rng.uniform(spec.capacity_lo, spec.capacity_hi)});
      }
      if (y + 1 < spec.rows) {
        edges.push_back({grid_edge_id({x, y}, {x, y + 1}), grid_node_id({x, y}),
                         grid_node_id({x, y + 1}),
                         cap_rng.uniform(spec.capacity_lo, spec.capacity_hi)});
      }
    }
  }
  Rng line_rng(derive_seed(spec.seed, "lines"));
  std::vector<Pool> pools;
  for (int k = 0; k < spec.pools; ++k) {
    Pool pool;
    pool.id = detail::pool_name(k);
    if (k > 0 && spec.perturb_fraction) {
      pool.lines = pools.front().lines;
    } else {
      for (int i = 0; i < spec.lines_per_pool; ++i) {
        pool.lines.push_back(
            {detail::lop_name(i), detail::random_grid_line(spec, line_rng)});
      }
    }
    pools.push_back(std::move(pool));
  }
  PoolSystem system(std::move(pools));
  if (spec.perturb_fraction) {
    for (int k = 1; k < spec.pools; ++k) {
      system = perturb_pool(spec, system, static_cast<std::size_t>(k),
                            *spec.perturb_fraction,
                            derive_seed(spec.seed, "perturb"));
    }
  }
  return {Network(std::move(nodes), std::move(edges)), std::move(system)};
}

// Keeps only pool k.
inline PoolSystem collapse_to_pool(const PoolSystem& pools, std::size_t k) {
  if (k >= pools.num_pools()) throw InputError("pool index out of range");
  return PoolSystem({pools.pool(k)});
}

// Utility coefficients per pool for the two-pool scenarios S1-S4.
inline std::vector<double> scenario_coefficients(int scenario) {
  switch (scenario) {
    case 1: return {1e4, 1e4};
    case 2: return {0.75e4, 0.8e4};
    case 3: return {1e4, 0.5e4};
    case 4: return {1e4, 0.25e4};
    default: throw InputError("utility scenario must be 1..4");
  }
}

// Small random instance: a DAG on five nodes with up to `max_edges` edges,
// 1..max_lops LOPs whose lines are random walks, sqrt utilities with
// coefficients in [0.5, 2) and capacities in [1, 10).
struct ProblemInstance {
  Instance instance;
  UtilityTable utilities;
};

inline ProblemInstance random_small_instance(std::uint64_t seed, int max_edges,
                                             int max_lops, int pools) {
  if (max_edges < 1 || max_lops < 1 || pools < 1) {
    throw InputError("random instance sizes must be positive");
  }
  Rng rng(derive_seed(seed, "small"));
  const int num_nodes = 5;
  std::vector<std::string> nodes;
  for (int i = 0; i < num_nodes; ++i) nodes.push_back("n" + std::to_string(i));
  std::vector<std::pair<int, int>> candidates;
  for (int i = 0; i < num_nodes; ++i) {
    for (int j = i + 1; j < num_nodes; ++j) candidates.emplace_back(i, j);
  }
  for (std::size_t i = candidates.size(); i > 1; --i) {
    std::swap(candidates[i - 1], candidates[rng.below(i)]);
  }
  const int num_edges = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_edges)));
  std::vector<Edge> edges;
  for (int e = 0; e < num_edges; ++e) {
    const auto [a, b] = candidates[static_cast<std::size_t>(e)];
    edges.push_back({"e" + std::to_string(e), nodes[a], nodes[b],
                     rng.uniform(1.0, 10.0)});
  }
  auto random_line = [&]() {
    Line line;
    std::size_t cur = rng.below(edges.size());
    std::set<std::size_t> used;
    for (;;) {
      line.edges.push_back(edges[cur].id);
      used.insert(cur);
      std::vector<std::size_t> next;
      for (std::size_t e = 0; e < edges.size(); ++e) {
        if (!used.contains(e) && edges[e].tail == edges[cur].head) next.push_back(e);
      }
      if (next.empty() || rng.coin()) break;
      cur = next[rng.below(next.size())];
    }
    return line;
  };
  const int num_lops = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_lops)));
  std::vector<Pool> pool_list;
  std::map<std::pair<std::string, std::string>, double> coefficients;
  for (int k = 0; k < pools; ++k) {
    Pool pool;
    pool.id = detail::pool_name(k);
    for (int p = 0; p < num_lops; ++p) {
      // Each LOP sits out a pool with probability 1/5; pools stay nonempty.
      if (num_lops > 1 && p > 0 && rng.below(5) == 0) continue;
      pool.lines.push_back({detail::lop_name(p), random_line()});
      coefficients[{detail::lop_name(p), pool.id}] = rng.uniform(0.5, 2.0);
    }
    pool_list.push_back(std::move(pool));
  }
  Instance inst(Network(std::move(nodes), std::move(edges)),
                PoolSystem(std::move(pool_list)));
  UtilityTable table(inst, coefficients);
  return {std::move(inst), std::move(table)};
}

// Edges carrying at least `share` of some pool's cost, i.e. with
// Lambda_{l,k} c_l > share * c^T Lambda_k.
inline std::set<std::string> congested_edges(const Instance& inst,
                                             const OuterState& state,
                                             double share) {
  std::set<std::string> out;
  const Network& net = inst.network();
  for (std::size_t k = 0; k < state.pools.size(); ++k) {
    const std::vector<double>& prices = state.pools[k].prices;
    const double cost = pool_cost(net, prices);
    if (!(cost > 0.0)) continue;
    for (std::size_t e = 0; e < net.num_edges(); ++e) {
      if (prices[e] * net.capacity(e) > share * cost) out.insert(net.edge(e).id);
    }
  }
  return out;
}

enum class DisruptionKind { kReduce, kIncrease, kMixed };  // D1, D2, D3

inline std::string to_string(DisruptionKind kind) {
  switch (kind) {
    case DisruptionKind::kReduce: return "D1";
    case DisruptionKind::kIncrease: return "D2";
    case DisruptionKind::kMixed: return "D3";
  }
  return "?";
}

inline DisruptionKind parse_disruption(std::string_view name) {
  if (name == "D1") return DisruptionKind::kReduce;
  if (name == "D2") return DisruptionKind::kIncrease;
  if (name == "D3") return DisruptionKind::kMixed;
  throw InputError("unknown disruption scenario '" + std::string(name) + "'");
}

struct DisruptionSpec {
  DisruptionKind kind = DisruptionKind::kReduce;
  int edges = 1;           // m
  double magnitude = 0.1;  // delta
  std::uint64_t seed = 1;
};

// Largest edge count not above `requested` that `available` congested edges
// can support (half of them for D3).
inline int feasible_edge_count(DisruptionKind kind, std::size_t available,
                               int requested) {
  const auto cap = static_cast<int>(kind == DisruptionKind::kMixed ? available / 2
                                                                   : available);
  return std::min(requested, cap);
}

inline Network apply_disruption(const Network& net, const DisruptionSpec& spec,
                                const std::set<std::string>& congested) {
  if (spec.edges < 1) throw InputError("disruption needs at least one edge");
  if (spec.magnitude < 0.0 || spec.magnitude > 1.0) {
    throw InputError("disruption magnitude must lie in [0, 1]");
  }
  if (spec.kind != DisruptionKind::kIncrease && spec.magnitude >= 1.0) {
    throw InputError("a capacity reduction of 100% removes the edge");
  }
  const auto m = static_cast<std::size_t>(spec.edges);
  const std::size_t needed = spec.kind == DisruptionKind::kMixed ? 2 * m : m;
  if (congested.size() < needed) {
    throw InputError("disruption needs " + std::to_string(needed) +
                     " congested edges, found " + std::to_string(congested.size()));
  }
  std::vector<std::string> pick(congested.begin(), congested.end());
  Rng rng(derive_seed(spec.seed, "disruption"));
  for (std::size_t i = pick.size(); i > 1; --i) std::swap(pick[i - 1], pick[rng.below(i)]);
  std::vector<double> cap = net.capacities();
  auto scale = [&](const std::string& id, double factor) {
    cap[*net.edge_index(id)] *= factor;
  };
  switch (spec.kind) {
    case DisruptionKind::kReduce:
      for (std::size_t i = 0; i < m; ++i) scale(pick[i], 1.0 - spec.magnitude);
      break;
    case DisruptionKind::kIncrease:
      for (std::size_t i = 0; i < m; ++i) scale(pick[i], 1.0 + spec.magnitude);
      break;
    case DisruptionKind::kMixed:
      for (std::size_t i = 0; i < m; ++i) scale(pick[i], 1.0 - spec.magnitude);
      for (std::size_t i = m; i < 2 * m; ++i) scale(pick[i], 1.0 + spec.magnitude);
      break;
  }
  return net.with_capacities(cap);
}

struct ExperimentRecord {
  std::string scenario;  // e.g. "D1" or "S3"
  std::string size;      // e.g. "7x12"
  std::string mode;      // cold | warm
  double magnitude = 0.0;
  std::uint64_t seed = 0;
  bool converged = false;
  long f_updates = 0;
  std::vector<long> price_updates;  // per pool
  long bid_updates = 0;
  double wall_seconds = 0.0;
  double max_kkt = 0.0;  // max scaled KKT residual of the final state
};

inline KktReport mechanism_kkt(const Instance& inst, const UtilityTable& util,
                               const OuterState& state) {
  std::vector<std::vector<double>> prices;
  for (const PoolMarketState& p : state.pools) prices.push_back(p.prices);
  return kkt_report(inst, util, frequencies(state), state.f, prices, state.zeta);
}

inline ExperimentRecord make_record(const Instance& inst,
                                    const UtilityTable& util,
                                    const MechanismResult& result,
                                    std::string scenario, std::string size,
                                    std::string mode, double magnitude,
                                    std::uint64_t seed, double seconds) {
  ExperimentRecord r;
  r.scenario = std::move(scenario);
  r.size = std::move(size);
  r.mode = std::move(mode);
  r.magnitude = magnitude;
  r.seed = seed;
  r.converged = result.converged;
  r.f_updates = result.f_updates;
  r.price_updates = result.price_updates;
  r.bid_updates = result.total_bid_updates();
  r.wall_seconds = seconds;
  r.max_kkt = mechanism_kkt(inst, util, result.state).scaled.max();
  return r;
}

struct RecoveryOutcome {
  MechanismResult baseline;
  MechanismResult cold;
  MechanismResult warm;
  ExperimentRecord cold_record;
  ExperimentRecord warm_record;
  std::set<std::string> congested;
};

// The stored optimum is solved with the cost tolerance multiplied by this
// factor, so it sits at the optimum rather than anywhere in the band.
inline constexpr double kBaselineCostTolFactor = 0.1;

// Baseline for recovery experiments: a cold run at the tighter cost
// tolerance and its congested edges.
struct RecoveryBaseline {
  MechanismResult result;
  std::set<std::string> congested;
};

inline RecoveryBaseline recovery_baseline(const Instance& inst,
                                          const UtilityTable& util,
                                          const MechanismConfig& cfg) {
  MechanismConfig base_cfg = cfg;
  base_cfg.cost_tol = cfg.cost_tol * kBaselineCostTolFactor;
  RecoveryBaseline out;
  out.result = run_mechanism(inst, util, base_cfg, std::nullopt);
  if (!out.result.converged) {
    throw std::runtime_error("baseline run did not converge: " +
                             out.result.diagnostic);
  }
  out.congested = congested_edges(inst, out.result.state, cfg.inner.abs_tol);
  return out;
}

// Disrupts congested capacities of the baseline, then re-runs from the
// stored optimum (warm) and from scratch (cold) on the disrupted network.
inline RecoveryOutcome recover_from_baseline(const Instance& inst,
                                             const UtilityTable& util,
                                             const RecoveryBaseline& base,
                                             const DisruptionSpec& spec,
                                             const MechanismConfig& cfg,
                                             const std::string& size = "",
                                             bool run_cold = true) {
  using Clock = std::chrono::steady_clock;
  RecoveryOutcome out;
  out.baseline = base.result;
  out.congested = base.congested;
  const Instance disrupted =
      inst.with_network(apply_disruption(inst.network(), spec, out.congested));

  auto t0 = Clock::now();
  out.warm = run_mechanism(disrupted, util, cfg, out.baseline.state);
  auto t1 = Clock::now();
  if (run_cold) out.cold = run_mechanism(disrupted, util, cfg, std::nullopt);
  auto t2 = Clock::now();
  const std::string label = to_string(spec.kind);
  out.warm_record = make_record(disrupted, util, out.warm, label, size, "warm",
                                spec.magnitude, spec.seed,
                                std::chrono::duration<double>(t1 - t0).count());
  if (run_cold) {
    out.cold_record = make_record(disrupted, util, out.cold, label, size, "cold",
                                  spec.magnitude, spec.seed,
                                  std::chrono::duration<double>(t2 - t1).count());
  }
  return out;
}

inline RecoveryOutcome run_recovery_experiment(const Instance& inst,
                                               const UtilityTable& util,
                                               const DisruptionSpec& spec,
                                               const MechanismConfig& cfg,
                                               const std::string& size = "") {
  return recover_from_baseline(inst, util, recovery_baseline(inst, util, cfg),
                               spec, cfg, size);
}

}  // namespace lineplan

#endif  // LINEPLAN_SCENARIO_HPP
