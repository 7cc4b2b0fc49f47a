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

// Inner loop of the pricing mechanism for one pool at a fixed capacity
// proportion: projected price dynamics, frequency allocation x = w / mu and
// periodic selfish bid refresh.

#ifndef LINEPLAN_SINGLE_POOL_HPP
#define LINEPLAN_SINGLE_POOL_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "lineplan/error.hpp"
#include "lineplan/network.hpp"
#include "lineplan/utility.hpp"

namespace lineplan {

struct PoolMarketState {
  std::vector<double> prices;  // per network edge
  std::vector<double> bids;    // per pool member
  std::vector<double> freqs;   // per pool member
  double proportion = 1.0;
};

struct DynamicsConfig {
  // Fixed Euler step for the price update. When unset the step is chosen
  // every iteration as step_safety / max_l sum_{p on l} |line p| x_p / mu_p,
  // a Gershgorin bound on the price Jacobian at fixed bids.
  std::optional<double> price_step;
  // Defaults to 1 - 2^(-1 / bid_refresh_period): the stiffest price mode then
  // closes half of its gap between two bid refreshes, which keeps the
  // alternation between price relaxation and bid response from ringing.
  std::optional<double> step_safety;
  long bid_refresh_period = 10;
  // Capacity-normalized feasibility and complementarity tolerances.
  double abs_tol = 1e-3;
  // Relative stationarity tolerance |U'(x) - mu| / mu.
  double rel_tol = 1e-3;
  long max_iters = 2'000'000;
  // A bid refresh round counts as a bid update when some bid moves by more
  // than this fraction.
  double material_bid_change = 0.1;
  double initial_bid = 1.0;
  long trace_stride = 0;  // 0 disables tracing
};

// 0.01 * min capacity / max number of lines through an edge.
inline double capacity_scaled_price_step(const Instance& inst) {
  double min_c = std::numeric_limits<double>::infinity();
  for (const Edge& e : inst.network().edges()) min_c = std::min(min_c, e.capacity);
  std::size_t max_lines = 1;
  for (std::size_t k = 0; k < inst.num_pools(); ++k) {
    for (const auto& members : inst.pool(k).edge_members) {
      max_lines = std::max(max_lines, members.size());
    }
  }
  return 0.01 * min_c / static_cast<double>(max_lines);
}

struct PriceStepResult {
  std::vector<double> prices;
  std::vector<double> excess;  // load - c f
};

// One projected Euler step: a zero price only moves up on positive excess,
// a positive price follows the excess and is clamped at zero.
inline PriceStepResult price_step(std::span<const double> prices,
                                  std::span<const double> loads,
                                  std::span<const double> capacities,
                                  double proportion, double eta) {
  if (prices.size() != loads.size() || prices.size() != capacities.size()) {
    throw InputError("price, load and capacity vectors differ in size");
  }
  PriceStepResult out;
  out.prices.resize(prices.size());
  out.excess.resize(prices.size());
  for (std::size_t e = 0; e < prices.size(); ++e) {
    const double excess = loads[e] - capacities[e] * proportion;
    out.excess[e] = excess;
    if (prices[e] == 0.0) {
      out.prices[e] = eta * std::max(0.0, excess);
    } else {
      out.prices[e] = std::max(0.0, prices[e] + eta * excess);
    }
  }
  return out;
}

// Allocation for a LOP whose path price is zero: the tightest capacity share
// on her line.
inline double zero_price_cap(const Member& member,
                             std::span<const double> capacities,
                             double proportion) {
  double cap = std::numeric_limits<double>::infinity();
  for (std::size_t e : member.edges) cap = std::min(cap, capacities[e] * proportion);
  return cap;
}

inline std::vector<double> allocate_frequencies(const PoolMarketState& state,
                                                const Instance& inst,
                                                std::size_t k) {
  const ResolvedPool& pool = inst.pool(k);
  if (state.bids.size() != pool.members.size() ||
      state.prices.size() != inst.num_edges()) {
    throw InputError("market state does not match pool structure");
  }
  const std::vector<double> capacities = inst.network().capacities();
  std::vector<double> x(pool.members.size());
  for (std::size_t m = 0; m < pool.members.size(); ++m) {
    const double w = state.bids[m];
    const double mu = path_price(pool.members[m], state.prices);
    if (w == 0.0) {
      x[m] = 0.0;
    } else if (mu == 0.0) {
      x[m] = zero_price_cap(pool.members[m], capacities, state.proportion);
    } else {
      x[m] = w / mu;
    }
  }
  return x;
}

struct BidRefresh {
  std::vector<double> bids;
  std::vector<std::size_t> skipped;  // members left unchanged at mu = 0
  double max_relative_change = 0.0;
};

inline BidRefresh refresh_bids(const PoolMarketState& state,
                               const UtilityTable& utilities,
                               const Instance& inst, std::size_t k) {
  const ResolvedPool& pool = inst.pool(k);
  BidRefresh out;
  out.bids = state.bids;
  for (std::size_t m = 0; m < pool.members.size(); ++m) {
    const double mu = path_price(pool.members[m], state.prices);
    if (!(mu > 0.0)) {
      out.skipped.push_back(m);
      continue;
    }
    const double w = best_response_bid(utilities.at(k, m), mu);
    const double old = state.bids[m];
    const double change = old > 0.0
                              ? std::abs(w - old) / old
                              : std::numeric_limits<double>::infinity();
    out.max_relative_change = std::max(out.max_relative_change, change);
    out.bids[m] = w;
  }
  return out;
}

// Capacity-normalized KKT residuals of a pool market state.
struct PoolResiduals {
  double feasibility = 0.0;   // max (load - cf)^+ / cf
  double slackness = 0.0;     // max Lambda |load - cf| / sum Lambda c f
  double stationarity = 0.0;  // max |U'(x) - mu| / mu
  double max_excess = -std::numeric_limits<double>::infinity();

  bool within(const DynamicsConfig& cfg) const {
    return feasibility <= cfg.abs_tol && slackness <= cfg.abs_tol &&
           stationarity <= cfg.rel_tol;
  }
};

inline PoolResiduals pool_residuals(const Instance& inst, std::size_t k,
                                    const UtilityTable& utilities,
                                    const PoolMarketState& state) {
  const ResolvedPool& pool = inst.pool(k);
  const Network& net = inst.network();
  const std::vector<double> load =
      pool_loads(pool, inst.num_edges(), state.freqs);
  PoolResiduals r;
  double spend = 0.0;
  for (std::size_t e = 0; e < inst.num_edges(); ++e) {
    spend += state.prices[e] * net.capacity(e) * state.proportion;
  }
  for (std::size_t e = 0; e < inst.num_edges(); ++e) {
    if (pool.edge_members[e].empty() && state.prices[e] == 0.0) continue;
    const double cf = net.capacity(e) * state.proportion;
    const double excess = load[e] - cf;
    r.max_excess = std::max(r.max_excess, excess);
    r.feasibility = std::max(r.feasibility, std::max(0.0, excess) / cf);
    if (state.prices[e] > 0.0) {
      r.slackness =
          std::max(r.slackness, state.prices[e] * std::abs(excess) / spend);
    }
  }
  // U'(w / mu) / mu = sqrt(w* / w) where w* is the best response at mu.
  for (std::size_t m = 0; m < pool.members.size(); ++m) {
    const double mu = path_price(pool.members[m], state.prices);
    const double w = state.bids[m];
    if (!(mu > 0.0) || !(w > 0.0)) {
      r.stationarity = std::numeric_limits<double>::infinity();
      continue;
    }
    const double target = best_response_bid(utilities.at(k, m), mu);
    r.stationarity = std::max(r.stationarity, std::abs(std::sqrt(target / w) - 1.0));
  }
  return r;
}

struct PoolTraceSample {
  long iter = 0;
  double max_excess = 0.0;
  std::vector<double> prices;
  std::vector<double> freqs;
};

struct SinglePoolResult {
  PoolMarketState state;
  bool converged = false;
  long iterations = 0;  // price updates
  long bid_rounds = 0;
  long bid_updates = 0;  // rounds with a material bid change
  long skipped_refreshes = 0;
  PoolResiduals residuals;
  std::vector<PoolTraceSample> trace;
};

// V estimate of a trace sample against the run's final prices.
inline double lyapunov(std::span<const double> prices,
                       std::span<const double> reference) {
  double v = 0.0;
  for (std::size_t e = 0; e < prices.size(); ++e) {
    const double d = prices[e] - reference[e];
    v += d * d;
  }
  return 0.5 * v;
}

namespace detail {

// Proportional price sum_{p on l} w_p / (c_l f) on the zero-priced edges of
// every bidding member whose path price vanished.
inline void reseed_zero_prices(PoolMarketState& state, const Instance& inst,
                               std::size_t k, double fallback_bid) {
  const ResolvedPool& pool = inst.pool(k);
  const Network& net = inst.network();
  for (std::size_t m = 0; m < pool.members.size(); ++m) {
    if (path_price(pool.members[m], state.prices) > 0.0) continue;
    for (std::size_t e : pool.members[m].edges) {
      double bids = 0.0;
      for (std::size_t q : pool.edge_members[e]) bids += state.bids[q];
      if (!(bids > 0.0)) bids = fallback_bid;
      state.prices[e] = bids / (net.capacity(e) * state.proportion);
    }
  }
}

inline double adaptive_step(const PoolMarketState& state, const Instance& inst,
                            std::size_t k, double safety) {
  const ResolvedPool& pool = inst.pool(k);
  std::vector<double> weight(pool.members.size(), 0.0);
  for (std::size_t m = 0; m < pool.members.size(); ++m) {
    const double mu = path_price(pool.members[m], state.prices);
    if (mu > 0.0) {
      weight[m] = static_cast<double>(pool.members[m].edges.size()) *
                  state.freqs[m] / mu;
    }
  }
  double row = 0.0;
  for (const auto& members : pool.edge_members) {
    double s = 0.0;
    for (std::size_t m : members) s += weight[m];
    row = std::max(row, s);
  }
  return row > 0.0 ? safety / row : 0.0;
}

}  // namespace detail

// Cold start: every LOP bids initial_bid, the NOP announces proportional
// prices, then every LOP best-responds once.
inline PoolMarketState cold_pool_state(const Instance& inst, std::size_t k,
                                       const UtilityTable& utilities,
                                       double proportion,
                                       const DynamicsConfig& cfg) {
  const ResolvedPool& pool = inst.pool(k);
  PoolMarketState s;
  s.proportion = proportion;
  s.prices.assign(inst.num_edges(), 0.0);
  s.bids.assign(pool.members.size(), cfg.initial_bid);
  const Network& net = inst.network();
  for (std::size_t e = 0; e < inst.num_edges(); ++e) {
    double bids = 0.0;
    for (std::size_t m : pool.edge_members[e]) bids += s.bids[m];
    s.prices[e] = bids / (net.capacity(e) * proportion);
  }
  s.bids = refresh_bids(s, utilities, inst, k).bids;
  s.freqs = allocate_frequencies(s, inst, k);
  return s;
}

inline SinglePoolResult run_single_pool(
    const Instance& inst, std::size_t k, const UtilityTable& utilities,
    double proportion, const std::optional<PoolMarketState>& warm,
    const DynamicsConfig& cfg) {
  if (k >= inst.num_pools()) throw InputError("pool index out of range");
  if (!(proportion > 0.0) || proportion > 1.0 + 1e-12) {
    throw InputError("pool proportion must lie in (0, 1]");
  }
  if (cfg.bid_refresh_period <= 0 || cfg.max_iters <= 0) {
    throw InputError("dynamics config counts must be positive");
  }
  const ResolvedPool& pool = inst.pool(k);
  SinglePoolResult out;
  if (warm) {
    if (warm->prices.size() != inst.num_edges() ||
        warm->bids.size() != pool.members.size()) {
      throw InputError("warm state does not match pool structure");
    }
    out.state = *warm;
    out.state.proportion = proportion;
    detail::reseed_zero_prices(out.state, inst, k, cfg.initial_bid);
  } else {
    out.state = cold_pool_state(inst, k, utilities, proportion, cfg);
    out.bid_rounds = 1;
  }
  PoolMarketState& s = out.state;
  s.freqs = allocate_frequencies(s, inst, k);
  const std::vector<double> capacities = inst.network().capacities();
  const double safety =
      cfg.step_safety.value_or(1.0 - std::exp2(-1.0 / static_cast<double>(
                                                   cfg.bid_refresh_period)));

  auto sample = [&](long iter, double max_excess) {
    if (cfg.trace_stride > 0 && iter % cfg.trace_stride == 0) {
      out.trace.push_back({iter, max_excess, s.prices, s.freqs});
    }
  };

  out.residuals = pool_residuals(inst, k, utilities, s);
  sample(0, out.residuals.max_excess);
  if (pool.members.empty() || out.residuals.within(cfg)) {
    out.converged = true;
    return out;
  }

  for (long iter = 1; iter <= cfg.max_iters; ++iter) {
    const double eta =
        cfg.price_step ? *cfg.price_step
                       : detail::adaptive_step(s, inst, k, safety);
    const std::vector<double> load =
        pool_loads(pool, inst.num_edges(), s.freqs);
    s.prices = price_step(s.prices, load, capacities, proportion, eta).prices;
    ++out.iterations;
    detail::reseed_zero_prices(s, inst, k, cfg.initial_bid);
    s.freqs = allocate_frequencies(s, inst, k);

    if (iter % cfg.bid_refresh_period == 0) {
      BidRefresh refresh = refresh_bids(s, utilities, inst, k);
      ++out.bid_rounds;
      out.skipped_refreshes += static_cast<long>(refresh.skipped.size());
      if (refresh.max_relative_change > cfg.material_bid_change) {
        ++out.bid_updates;
      }
      s.bids = std::move(refresh.bids);
      s.freqs = allocate_frequencies(s, inst, k);
    }

    out.residuals = pool_residuals(inst, k, utilities, s);
    sample(iter, out.residuals.max_excess);
    if (out.residuals.within(cfg)) {
      out.converged = true;
      break;
    }
  }
  if (cfg.trace_stride > 0 && !out.trace.empty() &&
      out.trace.back().iter != out.iterations) {
    out.trace.push_back(
        {out.iterations, out.residuals.max_excess, s.prices, s.freqs});
  }
  return out;
}

}  // namespace lineplan

#endif  // LINEPLAN_SINGLE_POOL_HPP
