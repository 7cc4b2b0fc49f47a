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

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "fixtures.hpp"
#include "lineplan/oracle.hpp"
#include "lineplan/rng.hpp"
#include "lineplan/scenario.hpp"
#include "lineplan/single_pool.hpp"

namespace lineplan {
namespace {

using testing::shared_edge;
using testing::two_edge;

TEST(PriceStep, Examples) {
  const std::vector<double> cap{4.0};
  EXPECT_DOUBLE_EQ(price_step(std::vector{0.0}, std::vector{6.0}, cap, 1.0, 0.1).prices[0], 0.2);
  EXPECT_DOUBLE_EQ(price_step(std::vector{0.5}, std::vector{2.0}, cap, 1.0, 0.1).prices[0], 0.3);
  EXPECT_EQ(price_step(std::vector{0.1}, std::vector{0.0}, cap, 1.0, 0.1).prices[0], 0.0);
}

TEST(PriceStep, ZeroPriceIgnoresSlack) {
  const auto r = price_step(std::vector{0.0, 0.0}, std::vector{1.0, 3.0},
                            std::vector{2.0, 2.0}, 1.0, 1.0);
  EXPECT_EQ(r.prices[0], 0.0);
  EXPECT_DOUBLE_EQ(r.prices[1], 1.0);
  EXPECT_DOUBLE_EQ(r.excess[0], -1.0);
  EXPECT_THROW(price_step(std::vector{0.0}, std::vector{1.0, 2.0}, std::vector{1.0}, 1.0, 1.0),
               InputError);
}

PoolMarketState state_for(const Instance& inst, std::vector<double> prices,
                          std::vector<double> bids, double f) {
  PoolMarketState s;
  s.prices = std::move(prices);
  s.bids = std::move(bids);
  s.freqs.assign(s.bids.size(), 0.0);
  s.proportion = f;
  (void)inst;
  return s;
}

TEST(Allocate, Examples) {
  const Instance inst = shared_edge(4.0, {{"L"}});
  EXPECT_DOUBLE_EQ(allocate_frequencies(state_for(inst, {2.0}, {10.0}, 1.0), inst, 0)[0], 5.0);
  EXPECT_EQ(allocate_frequencies(state_for(inst, {3.0}, {0.0}, 1.0), inst, 0)[0], 0.0);
  EXPECT_DOUBLE_EQ(allocate_frequencies(state_for(inst, {0.0}, {2.0}, 1.0), inst, 0)[0], 4.0);
}

TEST(Allocate, ZeroPriceCapUsesTightestEdge) {
  const Instance inst = two_edge(3.0, 8.0);
  const auto x = allocate_frequencies(state_for(inst, {0.0, 0.0}, {1.0, 1.0}, 0.5), inst, 0);
  EXPECT_DOUBLE_EQ(x[0], 1.5);
  EXPECT_DOUBLE_EQ(x[1], 4.0);
}

TEST(RefreshBids, Examples) {
  const Instance inst = shared_edge(4.0, {{"L"}});
  const UtilityTable u = UtilityTable::per_pool(inst, {2.0});
  EXPECT_DOUBLE_EQ(refresh_bids(state_for(inst, {1.0}, {7.0}, 1.0), u, inst, 0).bids[0], 1.0);
  EXPECT_DOUBLE_EQ(refresh_bids(state_for(inst, {0.5}, {7.0}, 1.0), u, inst, 0).bids[0], 2.0);
  const BidRefresh skipped = refresh_bids(state_for(inst, {0.0}, {7.0}, 1.0), u, inst, 0);
  EXPECT_EQ(skipped.bids[0], 7.0);
  ASSERT_EQ(skipped.skipped.size(), 1u);
  EXPECT_EQ(skipped.skipped[0], 0u);
}

TEST(PriceStepSize, CapacityScaledDefault) {
  // min capacity 4, at most two lines on one edge.
  EXPECT_DOUBLE_EQ(capacity_scaled_price_step(two_edge(4.0, 6.0)), 0.02);
}

TEST(RunSinglePool, SingleEdgeClosedForm) {
  const Instance inst = shared_edge(4.0, {{"L"}});
  const UtilityTable u = UtilityTable::per_pool(inst, {2.0});
  const DynamicsConfig cfg;
  const SinglePoolResult r = run_single_pool(inst, 0, u, 1.0, std::nullopt, cfg);
  ASSERT_TRUE(r.converged);
  EXPECT_NEAR(r.state.freqs[0], 4.0, 4.0 * cfg.rel_tol * 2);
  EXPECT_NEAR(r.state.prices[0], 0.5, 0.5 * cfg.rel_tol * 2);
  EXPECT_NEAR(r.state.bids[0], 2.0, 2.0 * cfg.rel_tol * 2);

  const SinglePoolResult again = run_single_pool(inst, 0, u, 1.0, r.state, cfg);
  EXPECT_TRUE(again.converged);
  EXPECT_LE(again.iterations, 1);
}

TEST(RunSinglePool, TwoIdenticalLopsSplitEdge) {
  const Instance inst = shared_edge(4.0, {{"A", "B"}});
  const UtilityTable u = UtilityTable::per_pool(inst, {2.0});
  const SinglePoolResult r = run_single_pool(inst, 0, u, 1.0, std::nullopt, {});
  ASSERT_TRUE(r.converged);
  const PoolOptimum o = solve_pool<SqrtUtility>(inst.pool(0), 1, std::vector{4.0}, u.pool(0));
  EXPECT_NEAR(r.state.freqs[0], 2.0, 0.01);
  EXPECT_NEAR(r.state.freqs[1], 2.0, 0.01);
  EXPECT_NEAR(o.x[0], 2.0, 1e-6);
}

TEST(RunSinglePool, FixedCapacityScaledStepConverges) {
  const Instance inst = shared_edge(4.0, {{"L"}});
  const UtilityTable u = UtilityTable::per_pool(inst, {2.0});
  DynamicsConfig cfg;
  cfg.price_step = capacity_scaled_price_step(inst);
  const SinglePoolResult r = run_single_pool(inst, 0, u, 1.0, std::nullopt, cfg);
  ASSERT_TRUE(r.converged);
  EXPECT_NEAR(r.state.freqs[0], 4.0, 0.01);
}

TEST(RunSinglePool, NonConvergenceIsAResult) {
  const Instance inst = two_edge(4.0, 6.0);
  const UtilityTable u = UtilityTable::per_pool(inst, {2.0});
  DynamicsConfig cfg;
  cfg.max_iters = 3;
  const SinglePoolResult r = run_single_pool(inst, 0, u, 1.0, std::nullopt, cfg);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.iterations, 3);
  EXPECT_FALSE(r.residuals.within(cfg));
}

TEST(RunSinglePool, RejectsBadInput) {
  const Instance inst = two_edge(4.0, 6.0);
  const UtilityTable u = UtilityTable::per_pool(inst, {2.0});
  EXPECT_THROW(run_single_pool(inst, 0, u, 0.0, std::nullopt, {}), InputError);
  EXPECT_THROW(run_single_pool(inst, 3, u, 1.0, std::nullopt, {}), InputError);
  PoolMarketState bad;
  bad.prices = {1.0};
  EXPECT_THROW(run_single_pool(inst, 0, u, 1.0, bad, {}), InputError);
}

TEST(RunSinglePool, TraceSamplesStrideAndEnd) {
  const Instance inst = two_edge(4.0, 6.0);
  const UtilityTable u = UtilityTable::per_pool(inst, {2.0});
  DynamicsConfig cfg;
  cfg.trace_stride = 5;
  const SinglePoolResult r = run_single_pool(inst, 0, u, 1.0, std::nullopt, cfg);
  ASSERT_TRUE(r.converged);
  ASSERT_GE(r.trace.size(), 2u);
  EXPECT_EQ(r.trace.front().iter, 0);
  EXPECT_EQ(r.trace[1].iter, 5);
  EXPECT_EQ(r.trace.back().iter, r.iterations);
}

TEST(SinglePoolProperties, ConvergedStatesSatisfyInvariants) {
  Rng rng(21);
  for (std::uint64_t seed = 1; seed <= 60; ++seed) {
    const ProblemInstance p = random_small_instance(seed, 6, 3, 1);
    const double f = rng.uniform(0.2, 1.0);
    const DynamicsConfig cfg;
    const SinglePoolResult r = run_single_pool(p.instance, 0, p.utilities, f, std::nullopt, cfg);
    ASSERT_TRUE(r.converged) << "seed " << seed;
    const PoolMarketState& s = r.state;
    const ResolvedPool& pool = p.instance.pool(0);
    const auto load = pool_loads(pool, p.instance.num_edges(), s.freqs);
    double spend = 0.0;
    for (std::size_t e = 0; e < load.size(); ++e) {
      spend += s.prices[e] * p.instance.network().capacity(e) * f;
    }
    for (std::size_t e = 0; e < load.size(); ++e) {
      const double cf = p.instance.network().capacity(e) * f;
      EXPECT_GE(s.prices[e], 0.0);
      EXPECT_LE(load[e], cf * (1 + cfg.abs_tol));
      EXPECT_LE(s.prices[e] * std::abs(load[e] - cf), cfg.abs_tol * spend);
    }
    for (std::size_t m = 0; m < pool.members.size(); ++m) {
      const double mu = path_price(pool.members[m], s.prices);
      ASSERT_GT(mu, 0.0);
      EXPECT_EQ(s.freqs[m], s.bids[m] / mu);
      EXPECT_LE(std::abs(marginal_utility(p.utilities.at(0, m), s.freqs[m]) - mu),
                cfg.rel_tol * (1 + 1e-9) * mu);
    }
  }
}

TEST(SinglePoolProperties, MatchesOracle) {
  for (std::uint64_t seed = 100; seed < 140; ++seed) {
    const ProblemInstance p = random_small_instance(seed, 6, 3, 1);
    const SinglePoolResult r = run_single_pool(p.instance, 0, p.utilities, 1.0, std::nullopt, {});
    ASSERT_TRUE(r.converged);
    const FixedSplitSolution o = solve_fixed_f(p.instance, p.utilities, std::vector{1.0});
    const double got = total_utility(p.utilities, {r.state.freqs});
    EXPECT_NEAR(got, o.objective, 5e-3 * o.objective) << "seed " << seed;
  }
}

TEST(SinglePoolProperties, Deterministic) {
  const ProblemInstance p = random_small_instance(77, 6, 3, 1);
  const SinglePoolResult a = run_single_pool(p.instance, 0, p.utilities, 0.7, std::nullopt, {});
  const SinglePoolResult b = run_single_pool(p.instance, 0, p.utilities, 0.7, std::nullopt, {});
  EXPECT_EQ(a.iterations, b.iterations);
  EXPECT_EQ(a.state.prices, b.state.prices);
  EXPECT_EQ(a.state.bids, b.state.bids);
}

// Fixed bids: V = |Lambda - Lambda_bar|^2 / 2 may only grow by the Euler slack.
TEST(SinglePoolProperties, LyapunovDescentAtFixedBids) {
  for (std::uint64_t seed = 200; seed < 230; ++seed) {
    const ProblemInstance p = random_small_instance(seed, 6, 3, 1);
    const Instance& inst = p.instance;
    DynamicsConfig cfg;
    PoolMarketState s = cold_pool_state(inst, 0, p.utilities, 1.0, cfg);
    const PoolOptimum ref = solve_fixed_bids(inst, 0, s.bids, 1.0);
    const double eta = detail::adaptive_step(s, inst, 0, 0.5);
    const auto caps = inst.network().capacities();
    double v = lyapunov(s.prices, ref.prices);
    const double v0 = v;
    for (int t = 0; t < 500; ++t) {
      const auto load = pool_loads(inst.pool(0), inst.num_edges(), s.freqs);
      const PriceStepResult step = price_step(s.prices, load, caps, 1.0, eta);
      double g2 = 0.0;
      for (double g : step.excess) g2 += g * g;
      s.prices = step.prices;
      s.freqs = allocate_frequencies(s, inst, 0);
      const double next = lyapunov(s.prices, ref.prices);
      EXPECT_LE(next - v, 0.5 * eta * eta * g2 + 1e-12 * (1 + v)) << "seed " << seed << " t " << t;
      v = next;
    }
    EXPECT_LE(v, v0 + 1e-12);
  }
}

}  // namespace
}  // namespace lineplan
