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

// The NOP's outer loop: solve every pool at the current capacity split,
// compare capacity-weighted pool costs and shift capacity towards the
// expensive pools until the costs equalize.

#ifndef LINEPLAN_MULTI_POOL_HPP
#define LINEPLAN_MULTI_POOL_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <future>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lineplan/error.hpp"
#include "lineplan/network.hpp"
#include "lineplan/single_pool.hpp"
#include "lineplan/utility.hpp"

namespace lineplan {

enum class ProportionRule {
  kRelativeExcess,  // f += step * max(0, cost - zeta) / zeta
  kAbsoluteExcess,  // f += step * max(0, cost - zeta)
};

struct MechanismConfig {
  DynamicsConfig inner;
  double proportion_step = 0.1;
  ProportionRule rule = ProportionRule::kRelativeExcess;
  double cost_tol = 0.05;
  double f_floor = 1e-4;
  long max_outer = 5000;
  bool parallel = false;
};

// c^T Lambda_k.
inline double pool_cost(const Network& net, std::span<const double> prices) {
  double cost = 0.0;
  for (std::size_t e = 0; e < net.num_edges(); ++e) {
    cost += net.capacity(e) * prices[e];
  }
  return cost;
}

inline double mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

// Divides by the sum, then lifts entries below `floor` to it and rescales
// the rest until every entry is >= floor and the sum is one.
inline std::vector<double> normalize_proportions(std::vector<double> f,
                                                 double floor) {
  const double total = std::accumulate(f.begin(), f.end(), 0.0);
  if (!(total > 0.0)) throw DomainError("proportions sum to zero");
  for (double& v : f) v /= total;
  if (floor * static_cast<double>(f.size()) > 1.0) {
    throw InputError("proportion floor too large for the number of pools");
  }
  std::vector<bool> pinned(f.size(), false);
  for (;;) {
    double free_sum = 0.0;
    double pinned_sum = 0.0;
    bool changed = false;
    for (std::size_t k = 0; k < f.size(); ++k) {
      if (!pinned[k] && f[k] < floor) {
        pinned[k] = true;
        changed = true;
      }
      if (pinned[k]) {
        pinned_sum += floor;
      } else {
        free_sum += f[k];
      }
    }
    if (!changed) break;
    const double scale = (1.0 - pinned_sum) / free_sum;
    for (std::size_t k = 0; k < f.size(); ++k) {
      f[k] = pinned[k] ? floor : f[k] * scale;
    }
  }
  return f;
}

struct ProportionUpdate {
  std::vector<double> f;
  std::vector<double> raw;  // before normalization
  bool skipped = false;     // zeta <= 0
};

inline ProportionUpdate update_proportions(std::span<const double> f,
                                           std::span<const double> costs,
                                           double step, ProportionRule rule,
                                           double floor) {
  if (f.size() != costs.size()) throw InputError("f and costs differ in size");
  ProportionUpdate out;
  out.f.assign(f.begin(), f.end());
  out.raw = out.f;
  const double zeta = mean(costs);
  if (!(zeta > 0.0)) {
    out.skipped = true;
    return out;
  }
  for (std::size_t k = 0; k < f.size(); ++k) {
    double rate = std::max(0.0, costs[k] - zeta);
    if (rule == ProportionRule::kRelativeExcess) rate /= zeta;
    out.raw[k] = f[k] + step * rate;
  }
  out.f = normalize_proportions(out.raw, floor);
  return out;
}

// (max - min) / mean <= tol; a single pool is always balanced.
inline bool costs_equal(std::span<const double> costs, double tol) {
  if (costs.empty()) throw InputError("costs_equal needs at least one pool");
  if (costs.size() == 1) return true;
  const auto [lo, hi] = std::minmax_element(costs.begin(), costs.end());
  const double scale =
      std::max(mean(costs), std::numeric_limits<double>::min());
  return (*hi - *lo) / scale <= tol;
}

struct OuterState {
  std::vector<double> f;
  std::vector<PoolMarketState> pools;
  std::vector<double> costs;
  double zeta = 0.0;
  long outer_iter = 0;
};

struct OuterTraceRow {
  long outer_iter = 0;
  std::vector<double> f;
  std::vector<double> costs;
  double zeta = 0.0;
  long cumulative_price_updates = 0;
};

struct MechanismResult {
  OuterState state;
  bool converged = false;
  long f_updates = 0;
  std::vector<long> price_updates;  // per pool, summed over outer iterations
  std::vector<long> bid_rounds;
  std::vector<long> bid_updates;
  std::vector<OuterTraceRow> trace;
  std::vector<SinglePoolResult> last_inner;
  std::string diagnostic;

  long total_price_updates() const {
    return std::accumulate(price_updates.begin(), price_updates.end(), 0L);
  }
  long total_bid_updates() const {
    return std::accumulate(bid_updates.begin(), bid_updates.end(), 0L);
  }
};

inline MechanismResult run_mechanism(const Instance& inst,
                                     const UtilityTable& utilities,
                                     const MechanismConfig& cfg,
                                     const std::optional<OuterState>& warm = std::nullopt) {
  const std::size_t K = inst.num_pools();
  if (K == 0) throw InputError("instance has no pools");
  if (utilities.num_pools() != K) {
    throw InputError("utility table does not match the pool system");
  }
  MechanismResult out;
  out.price_updates.assign(K, 0);
  out.bid_rounds.assign(K, 0);
  out.bid_updates.assign(K, 0);
  OuterState& st = out.state;
  std::vector<std::optional<PoolMarketState>> seeds(K);
  if (warm) {
    if (warm->f.size() != K || warm->pools.size() != K) {
      throw InputError("warm state does not match the number of pools");
    }
    st.f = normalize_proportions(warm->f, cfg.f_floor);
    for (std::size_t k = 0; k < K; ++k) seeds[k] = warm->pools[k];
  } else {
    st.f.assign(K, 1.0 / static_cast<double>(K));
  }
  st.pools.resize(K);
  st.costs.assign(K, 0.0);

  for (long outer = 0;; ++outer) {
    st.outer_iter = outer;
    std::vector<SinglePoolResult> inner(K);
    auto solve = [&](std::size_t k) {
      return run_single_pool(inst, k, utilities, st.f[k], seeds[k], cfg.inner);
    };
    if (cfg.parallel && K > 1) {
      std::vector<std::future<SinglePoolResult>> jobs;
      for (std::size_t k = 0; k < K; ++k) {
        jobs.push_back(std::async(std::launch::async, solve, k));
      }
      for (std::size_t k = 0; k < K; ++k) inner[k] = jobs[k].get();
    } else {
      for (std::size_t k = 0; k < K; ++k) inner[k] = solve(k);
    }
    bool all_converged = true;
    for (std::size_t k = 0; k < K; ++k) {
      out.price_updates[k] += inner[k].iterations;
      out.bid_rounds[k] += inner[k].bid_rounds;
      out.bid_updates[k] += inner[k].bid_updates;
      st.pools[k] = inner[k].state;
      seeds[k] = inner[k].state;
      st.costs[k] = pool_cost(inst.network(), st.pools[k].prices);
      all_converged = all_converged && inner[k].converged;
    }
    st.zeta = mean(st.costs);
    out.trace.push_back(
        {outer, st.f, st.costs, st.zeta, out.total_price_updates()});
    out.last_inner = std::move(inner);
    if (!all_converged) {
      out.diagnostic = "inner price dynamics did not converge at outer " +
                       std::to_string(outer);
      return out;
    }
    if (costs_equal(st.costs, cfg.cost_tol)) {
      out.converged = true;
      return out;
    }
    if (out.f_updates >= cfg.max_outer) {
      out.diagnostic = "pool costs not equalized within max_outer updates";
      return out;
    }
    ProportionUpdate upd = update_proportions(
        st.f, st.costs, cfg.proportion_step, cfg.rule, cfg.f_floor);
    if (upd.skipped) {
      out.diagnostic = "all pool costs are zero; proportion update skipped";
      return out;
    }
    st.f = std::move(upd.f);
    ++out.f_updates;
  }
}

// Frequencies per pool of an outer state, for objective evaluation.
inline std::vector<std::vector<double>> frequencies(const OuterState& st) {
  std::vector<std::vector<double>> x;
  for (const PoolMarketState& p : st.pools) x.push_back(p.freqs);
  return x;
}

// Scales each pool's frequencies down uniformly until no edge exceeds c f.
inline std::vector<std::vector<double>> feasible_projection(
    const Instance& inst, std::span<const double> f,
    std::vector<std::vector<double>> x) {
  for (std::size_t k = 0; k < inst.num_pools(); ++k) {
    const std::vector<double> load = pool_loads(inst.pool(k), inst.num_edges(), x[k]);
    double scale = 1.0;
    for (std::size_t e = 0; e < inst.num_edges(); ++e) {
      const double cap = inst.network().capacity(e) * f[k];
      if (load[e] > cap) scale = std::min(scale, cap / load[e]);
    }
    for (double& v : x[k]) v *= scale;
  }
  return x;
}

}  // namespace lineplan

#endif  // LINEPLAN_MULTI_POOL_HPP
