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

#include <algorithm>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "lineplan/network.hpp"
#include "lineplan/rng.hpp"

namespace lineplan {
namespace {

using testing::chain;
using testing::two_edge;

std::vector<ViolationKind> kinds(const std::vector<Violation>& vs) {
  std::vector<ViolationKind> out;
  for (const Violation& v : vs) out.push_back(v.kind);
  return out;
}

TEST(Validate, WellFormedSingleEdge) {
  Network net({"A", "B"}, {{"e", "A", "B", 3.0}});
  PoolSystem pools({{"k", {{"L", Line{{"e"}}}}}});
  EXPECT_TRUE(validate_network(net, pools).empty());
}

TEST(Validate, MissingEdge) {
  Network net({"A", "B"}, {{"e", "A", "B", 3.0}});
  PoolSystem pools({{"k", {{"L", Line{{"nope"}}}}}});
  const auto vs = validate_network(net, pools);
  ASSERT_EQ(vs.size(), 1u);
  EXPECT_EQ(vs[0].kind, ViolationKind::kMissingEdge);
  EXPECT_EQ(vs[0].edge, "nope");
  EXPECT_EQ(vs[0].lop, "L");
  EXPECT_EQ(vs[0].pool, "k");
}

TEST(Validate, NonpositiveCapacity) {
  Network net({"A", "B"}, {{"e", "A", "B", 0.0}});
  PoolSystem pools({{"k", {{"L", Line{{"e"}}}}}});
  EXPECT_EQ(kinds(validate_network(net, pools)),
            std::vector{ViolationKind::kNonpositiveCapacity});
}

TEST(Validate, StructuralBreaches) {
  Network net({"A", "B", "C", "A"},
              {{"ab", "A", "B", 1.0}, {"ab", "A", "B", 1.0}, {"cx", "C", "X", 1.0}});
  PoolSystem pools({{"k", {{"L", Line{{}}}, {"M", Line{{"ab", "ab"}}}, {"N", Line{{"cx", "ab"}}}}},
                    {"k", {}}});
  const auto ks = kinds(validate_network(net, pools));
  for (ViolationKind want :
       {ViolationKind::kDuplicateNode, ViolationKind::kDuplicateEdge,
        ViolationKind::kMissingNode, ViolationKind::kEmptyLine, ViolationKind::kRepeatedEdge,
        ViolationKind::kDisconnectedLine, ViolationKind::kDuplicatePool}) {
    EXPECT_NE(std::find(ks.begin(), ks.end(), want), ks.end()) << to_string(want);
  }
}

TEST(Validate, DuplicateLopInPool) {
  Network net({"A", "B"}, {{"e", "A", "B", 3.0}});
  PoolSystem pools({{"k", {{"L", Line{{"e"}}}, {"L", Line{{"e"}}}}}});
  EXPECT_EQ(kinds(validate_network(net, pools)),
            std::vector{ViolationKind::kDuplicateLopInPool});
}

TEST(Instance, RejectsInvalidInput) {
  Network net({"A", "B"}, {{"e", "A", "B", -1.0}});
  EXPECT_THROW(Instance(net, PoolSystem({{"k", {{"L", Line{{"e"}}}}}})), InputError);
}

TEST(Instance, AbsentLopHasNoMember) {
  Instance inst(chain({1, 1}), PoolSystem({{"a", {{"L1", Line{{"e1"}}}}},
                                           {"b", {{"L2", Line{{"e2"}}}}}}));
  EXPECT_EQ(inst.num_lops(), 2u);
  EXPECT_TRUE(inst.member_index(0, "L1").has_value());
  EXPECT_FALSE(inst.member_index(0, "L2").has_value());
  EXPECT_EQ(inst.lop_id(1, 0), "L2");
}

TEST(EdgeLoads, SingleLopOnTwoEdges) {
  Instance inst(chain({9, 9}), PoolSystem({{"k", {{"L", Line{{"e1", "e2"}}}}}}));
  const EdgeLoad load = edge_loads(inst, {{{"L", "k"}, 5.0}});
  EXPECT_DOUBLE_EQ(load.load[0][0], 5.0);
  EXPECT_DOUBLE_EQ(load.load[0][1], 5.0);
}

TEST(EdgeLoads, SharedEdgeSums) {
  Instance inst(chain({9}), PoolSystem({{"k", {{"L1", Line{{"e1"}}}, {"L2", Line{{"e1"}}}}}}));
  EXPECT_DOUBLE_EQ(edge_loads(inst, {{{"L1", "k"}, 2.0}, {{"L2", "k"}, 3.0}}).load[0][0], 5.0);
}

TEST(EdgeLoads, ZeroAndUnusedEdges) {
  Instance inst = two_edge(4, 4, 2);
  const EdgeLoad zero = edge_loads(inst, {});
  for (const auto& pool : zero.load) {
    for (double v : pool) EXPECT_EQ(v, 0.0);
  }
  const EdgeLoad only_l2 = edge_loads(inst, {{{"L2", "k1"}, 1.5}});
  EXPECT_EQ(only_l2.load[1][0], 0.0);
  EXPECT_DOUBLE_EQ(only_l2.load[1][1], 1.5);
  EXPECT_EQ(only_l2.load[0][1], 0.0);
}

TEST(EdgeLoads, UnknownKeyThrows) {
  Instance inst = two_edge(4, 4);
  EXPECT_THROW(edge_loads(inst, {{{"L9", "k0"}, 1.0}}), InputError);
  EXPECT_THROW(edge_loads(inst, {{{"L1", "zz"}, 1.0}}), InputError);
}

TEST(PathPrice, Examples) {
  Instance inst(chain({1, 1}), PoolSystem({{"k", {{"L", Line{{"e1", "e2"}}}, {"S", Line{{"e1"}}}}}}));
  EXPECT_DOUBLE_EQ(path_price(inst, {{{"e1", "k"}, 0.5}, {{"e2", "k"}, 0.25}}, "L", "k"), 0.75);
  EXPECT_EQ(path_price(inst, {}, "L", "k"), 0.0);
  EXPECT_DOUBLE_EQ(path_price(inst, {{{"e1", "k"}, 2.0}}, "S", "k"), 2.0);
}

TEST(PathPrice, AbsentLopThrows) {
  Instance inst(chain({1, 1}), PoolSystem({{"a", {{"L1", Line{{"e1"}}}}},
                                           {"b", {{"L2", Line{{"e2"}}}}}}));
  EXPECT_THROW(path_price(inst, {}, "L1", "b"), InputError);
}

// Random instances on a chain: every LOP rides a random contiguous segment.
Instance random_chain_instance(Rng& rng) {
  const std::size_t edges = 1 + rng.below(6);
  std::vector<double> caps;
  for (std::size_t e = 0; e < edges; ++e) caps.push_back(rng.uniform(1.0, 10.0));
  std::vector<Pool> pools;
  const std::size_t K = 1 + rng.below(3);
  for (std::size_t k = 0; k < K; ++k) {
    Pool p{"k" + std::to_string(k), {}};
    const std::size_t lops = 1 + rng.below(4);
    for (std::size_t i = 0; i < lops; ++i) {
      const std::size_t a = rng.below(edges);
      const std::size_t b = a + rng.below(edges - a);
      Line line;
      for (std::size_t e = a; e <= b; ++e) line.edges.push_back("e" + std::to_string(e + 1));
      p.lines.push_back({"L" + std::to_string(i), line});
    }
    pools.push_back(std::move(p));
  }
  return Instance(chain(caps), PoolSystem(std::move(pools)));
}

TEST(NetworkProperties, LoadsAreLinear) {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const Instance inst = random_chain_instance(rng);
    FrequencyMap x, y, sum;
    for (std::size_t k = 0; k < inst.num_pools(); ++k) {
      for (const PoolLine& pl : inst.pools().pool(k).lines) {
        const auto key = std::make_pair(pl.lop, inst.pools().pool(k).id);
        x[key] = rng.uniform(0.0, 5.0);
        y[key] = rng.uniform(0.0, 5.0);
        sum[key] = x[key] + y[key];
      }
    }
    const EdgeLoad lx = edge_loads(inst, x), ly = edge_loads(inst, y), ls = edge_loads(inst, sum);
    for (std::size_t k = 0; k < inst.num_pools(); ++k) {
      for (std::size_t e = 0; e < inst.num_edges(); ++e) {
        EXPECT_NEAR(ls.load[k][e], lx.load[k][e] + ly.load[k][e], 1e-12);
      }
    }
  }
}

TEST(NetworkProperties, PathPriceLinearAndLocal) {
  Rng rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    const Instance inst = random_chain_instance(rng);
    const std::size_t k = rng.below(inst.num_pools());
    const ResolvedPool& pool = inst.pool(k);
    std::vector<double> p(inst.num_edges()), q(inst.num_edges()), s(inst.num_edges());
    for (std::size_t e = 0; e < p.size(); ++e) {
      p[e] = rng.uniform(0.0, 3.0);
      q[e] = rng.uniform(0.0, 3.0);
      s[e] = 2.0 * p[e] + q[e];
    }
    for (std::size_t m = 0; m < pool.members.size(); ++m) {
      const Member& mem = pool.members[m];
      EXPECT_NEAR(path_price(mem, s), 2.0 * path_price(mem, p) + path_price(mem, q), 1e-12);
      std::vector<double> off = p;
      for (std::size_t e = 0; e < off.size(); ++e) {
        if (std::find(mem.edges.begin(), mem.edges.end(), e) == mem.edges.end()) off[e] += 7.0;
      }
      EXPECT_DOUBLE_EQ(path_price(mem, off), path_price(mem, p));
    }
  }
}

TEST(NetworkProperties, RoutingColumnsCountLineEdges) {
  Rng rng(13);
  for (int trial = 0; trial < 200; ++trial) {
    const Instance inst = random_chain_instance(rng);
    for (std::size_t k = 0; k < inst.num_pools(); ++k) {
      const auto R = routing_matrix(inst, k);
      const Pool& pool = inst.pools().pool(k);
      for (std::size_t m = 0; m < pool.lines.size(); ++m) {
        int ones = 0;
        for (std::size_t e = 0; e < R.size(); ++e) {
          EXPECT_TRUE(R[e][m] == 0 || R[e][m] == 1);
          ones += R[e][m];
        }
        EXPECT_EQ(ones, static_cast<int>(pool.lines[m].line.edges.size()));
      }
    }
  }
}

TEST(Network, WithCapacitiesLeavesOriginal) {
  const Network net = chain({1, 2});
  const Network scaled = net.with_capacities(std::vector<double>{3, 4});
  EXPECT_EQ(net.capacity(0), 1.0);
  EXPECT_EQ(scaled.capacity(1), 4.0);
  EXPECT_THROW(net.with_capacities(std::vector<double>{1}), InputError);
}

TEST(Rng, DeterministicAndDerived) {
  Rng a(5), b(5);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next(), b.next());
  EXPECT_NE(derive_seed(5, "x"), derive_seed(5, "y"));
  EXPECT_EQ(derive_seed(5, "x"), derive_seed(5, "x"));
  Rng c(9);
  for (int i = 0; i < 1000; ++i) {
    const double u = c.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
    EXPECT_LT(c.below(7), 7u);
  }
}

}  // namespace
}  // namespace lineplan
