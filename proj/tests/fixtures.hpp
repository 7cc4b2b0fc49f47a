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

// Small hand-built instances shared by the unit tests.

#ifndef LINEPLAN_TESTS_FIXTURES_HPP
#define LINEPLAN_TESTS_FIXTURES_HPP

#include <string>
#include <utility>
#include <vector>

#include "lineplan/network.hpp"
#include "lineplan/utility.hpp"

namespace lineplan::testing {

// A -> B with capacity c; each pool gets the listed LOPs on that edge.
inline Instance shared_edge(double c, const std::vector<std::vector<std::string>>& lops) {
  Network net({"A", "B"}, {{"ab", "A", "B", c}});
  std::vector<Pool> pools;
  for (std::size_t k = 0; k < lops.size(); ++k) {
    Pool p{"k" + std::to_string(k), {}};
    for (const std::string& lop : lops[k]) p.lines.push_back({lop, Line{{"ab"}}});
    pools.push_back(std::move(p));
  }
  return Instance(std::move(net), PoolSystem(std::move(pools)));
}

inline Network chain(std::vector<double> caps) {
  std::vector<std::string> nodes;
  std::vector<Edge> edges;
  for (std::size_t i = 0; i <= caps.size(); ++i) nodes.push_back("n" + std::to_string(i));
  for (std::size_t i = 0; i < caps.size(); ++i) {
    edges.push_back({"e" + std::to_string(i + 1), nodes[i], nodes[i + 1], caps[i]});
  }
  return Network(std::move(nodes), std::move(edges));
}

// Chain e1 (c1) -> e2 (c2); L1 rides both edges, L2 only e2, in every pool.
inline Instance two_edge(double c1, double c2, std::size_t pools = 1) {
  std::vector<Pool> ps;
  for (std::size_t k = 0; k < pools; ++k) {
    ps.push_back({"k" + std::to_string(k),
                  {{"L1", Line{{"e1", "e2"}}}, {"L2", Line{{"e2"}}}}});
  }
  return Instance(chain({c1, c2}), PoolSystem(std::move(ps)));
}

}  // namespace lineplan::testing

#endif  // LINEPLAN_TESTS_FIXTURES_HPP
