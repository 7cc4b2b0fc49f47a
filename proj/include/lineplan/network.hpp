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

// Capacitated transportation network, line pools and the per-pool routing
// structure derived from them.

#ifndef LINEPLAN_NETWORK_HPP
#define LINEPLAN_NETWORK_HPP

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lineplan/error.hpp"

namespace lineplan {

struct Edge {
  std::string id;
  std::string tail;
  std::string head;
  double capacity = 0.0;  // trains per period
};

class Network {
 public:
  Network() = default;
  Network(std::vector<std::string> nodes, std::vector<Edge> edges)
      : nodes_(std::move(nodes)), edges_(std::move(edges)) {
    for (std::size_t i = 0; i < edges_.size(); ++i) {
      edge_index_.emplace(edges_[i].id, i);
    }
  }

  const std::vector<std::string>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }
  std::size_t num_edges() const { return edges_.size(); }
  const Edge& edge(std::size_t e) const { return edges_[e]; }
  double capacity(std::size_t e) const { return edges_[e].capacity; }

  // First edge carrying `id`; duplicates are reported by validate_network.
  std::optional<std::size_t> edge_index(std::string_view id) const {
    auto it = edge_index_.find(std::string(id));
    if (it == edge_index_.end()) return std::nullopt;
    return it->second;
  }

  std::vector<double> capacities() const {
    std::vector<double> c(edges_.size());
    for (std::size_t e = 0; e < edges_.size(); ++e) c[e] = edges_[e].capacity;
    return c;
  }

  Network with_capacities(std::span<const double> capacity) const {
    if (capacity.size() != edges_.size()) {
      throw InputError("capacity vector size does not match edge count");
    }
    Network copy = *this;
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      copy.edges_[e].capacity = capacity[e];
    }
    return copy;
  }

 private:
  std::vector<std::string> nodes_;
  std::vector<Edge> edges_;
  std::unordered_map<std::string, std::size_t> edge_index_;
};

// Ordered edge ids forming a path.
struct Line {
  std::vector<std::string> edges;
  bool operator==(const Line&) const = default;
};

struct PoolLine {
  std::string lop;
  Line line;
};

struct Pool {
  std::string id;
  std::vector<PoolLine> lines;
};

// A LOP absent from a pool simply has no PoolLine there.
class PoolSystem {
 public:
  PoolSystem() = default;
  explicit PoolSystem(std::vector<Pool> pools) : pools_(std::move(pools)) {
    std::set<std::string> seen;
    for (const Pool& pool : pools_) {
      for (const PoolLine& pl : pool.lines) {
        if (seen.insert(pl.lop).second) lops_.push_back(pl.lop);
      }
    }
  }

  const std::vector<Pool>& pools() const { return pools_; }
  std::size_t num_pools() const { return pools_.size(); }
  const Pool& pool(std::size_t k) const { return pools_[k]; }
  // LOP ids in order of first appearance.
  const std::vector<std::string>& lops() const { return lops_; }

  std::optional<std::size_t> pool_index(std::string_view id) const {
    for (std::size_t k = 0; k < pools_.size(); ++k) {
      if (pools_[k].id == id) return k;
    }
    return std::nullopt;
  }

 private:
  std::vector<Pool> pools_;
  std::vector<std::string> lops_;
};

enum class ViolationKind {
  kDuplicateNode,
  kDuplicateEdge,
  kMissingNode,
  kNonpositiveCapacity,
  kDuplicatePool,
  kEmptyLine,
  kMissingEdge,
  kRepeatedEdge,
  kDisconnectedLine,
  kDuplicateLopInPool,
};

inline std::string_view to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::kDuplicateNode: return "duplicate-node";
    case ViolationKind::kDuplicateEdge: return "duplicate-edge";
    case ViolationKind::kMissingNode: return "missing-node";
    case ViolationKind::kNonpositiveCapacity: return "nonpositive-capacity";
    case ViolationKind::kDuplicatePool: return "duplicate-pool";
    case ViolationKind::kEmptyLine: return "empty-line";
    case ViolationKind::kMissingEdge: return "missing-edge";
    case ViolationKind::kRepeatedEdge: return "repeated-edge";
    case ViolationKind::kDisconnectedLine: return "disconnected-line";
    case ViolationKind::kDuplicateLopInPool: return "duplicate-lop-in-pool";
  }
  return "unknown";
}

struct Violation {
  ViolationKind kind;
  std::string edge;  // empty when not applicable
  std::string lop;
  std::string pool;
  std::string node;

  std::string describe() const {
    std::string out(to_string(kind));
    if (!pool.empty()) out += " pool=" + pool;
    if (!lop.empty()) out += " lop=" + lop;
    if (!edge.empty()) out += " edge=" + edge;
    if (!node.empty()) out += " node=" + node;
    return out;
  }
};

inline std::vector<Violation> validate_network(const Network& net,
                                               const PoolSystem& pools) {
  std::vector<Violation> out;
  std::set<std::string> nodes;
  for (const std::string& n : net.nodes()) {
    if (!nodes.insert(n).second) {
      out.push_back({ViolationKind::kDuplicateNode, "", "", "", n});
    }
  }
  std::set<std::string> edge_ids;
  for (const Edge& e : net.edges()) {
    if (!edge_ids.insert(e.id).second) {
      out.push_back({ViolationKind::kDuplicateEdge, e.id, "", "", ""});
    }
    if (!nodes.contains(e.tail)) {
      out.push_back({ViolationKind::kMissingNode, e.id, "", "", e.tail});
    }
    if (!nodes.contains(e.head)) {
      out.push_back({ViolationKind::kMissingNode, e.id, "", "", e.head});
    }
    if (!(e.capacity > 0.0)) {
      out.push_back({ViolationKind::kNonpositiveCapacity, e.id, "", "", ""});
    }
  }
  std::set<std::string> pool_ids;
  for (const Pool& pool : pools.pools()) {
    if (!pool_ids.insert(pool.id).second) {
      out.push_back({ViolationKind::kDuplicatePool, "", "", pool.id, ""});
    }
    std::set<std::string> lops;
    for (const PoolLine& pl : pool.lines) {
      if (!lops.insert(pl.lop).second) {
        out.push_back(
            {ViolationKind::kDuplicateLopInPool, "", pl.lop, pool.id, ""});
      }
      if (pl.line.edges.empty()) {
        out.push_back({ViolationKind::kEmptyLine, "", pl.lop, pool.id, ""});
        continue;
      }
      std::set<std::string> used;
      const Edge* prev = nullptr;
      for (const std::string& id : pl.line.edges) {
        if (!used.insert(id).second) {
          out.push_back({ViolationKind::kRepeatedEdge, id, pl.lop, pool.id, ""});
        }
        auto idx = net.edge_index(id);
        if (!idx) {
          out.push_back({ViolationKind::kMissingEdge, id, pl.lop, pool.id, ""});
          prev = nullptr;
          continue;
        }
        const Edge& cur = net.edge(*idx);
        if (prev != nullptr && prev->head != cur.tail) {
          out.push_back(
              {ViolationKind::kDisconnectedLine, id, pl.lop, pool.id, ""});
        }
        prev = &cur;
      }
    }
  }
  return out;
}

// A LOP's line in one pool, resolved to edge indices.
struct Member {
  std::size_t lop = 0;  // index into PoolSystem::lops()
  std::vector<std::size_t> edges;
};

struct ResolvedPool {
  std::vector<Member> members;
  // For each edge, the members whose line uses it (sparse columns of R(k)
  // transposed).
  std::vector<std::vector<std::size_t>> edge_members;
};

// Validated network + pools with dense index structures. Immutable.
class Instance {
 public:
  Instance(Network net, PoolSystem pools)
      : net_(std::move(net)), pools_(std::move(pools)) {
    std::vector<Violation> violations = validate_network(net_, pools_);
    if (!violations.empty()) {
      std::string msg = "invalid network:";
      for (const Violation& v : violations) msg += " [" + v.describe() + "]";
      throw InputError(msg);
    }
    std::unordered_map<std::string, std::size_t> lop_index;
    for (std::size_t i = 0; i < pools_.lops().size(); ++i) {
      lop_index.emplace(pools_.lops()[i], i);
    }
    resolved_.resize(pools_.num_pools());
    for (std::size_t k = 0; k < pools_.num_pools(); ++k) {
      ResolvedPool& rp = resolved_[k];
      rp.edge_members.resize(net_.num_edges());
      for (const PoolLine& pl : pools_.pool(k).lines) {
        Member m;
        m.lop = lop_index.at(pl.lop);
        for (const std::string& id : pl.line.edges) {
          m.edges.push_back(*net_.edge_index(id));
        }
        for (std::size_t e : m.edges) {
          rp.edge_members[e].push_back(rp.members.size());
        }
        rp.members.push_back(std::move(m));
      }
    }
  }

  const Network& network() const { return net_; }
  const PoolSystem& pools() const { return pools_; }
  std::size_t num_pools() const { return pools_.num_pools(); }
  std::size_t num_edges() const { return net_.num_edges(); }
  std::size_t num_lops() const { return pools_.lops().size(); }
  const ResolvedPool& pool(std::size_t k) const { return resolved_[k]; }

  std::optional<std::size_t> member_index(std::size_t k,
                                          std::string_view lop) const {
    const auto& members = resolved_[k].members;
    for (std::size_t i = 0; i < members.size(); ++i) {
      if (pools_.lops()[members[i].lop] == lop) return i;
    }
    return std::nullopt;
  }

  const std::string& lop_id(std::size_t k, std::size_t member) const {
    return pools_.lops()[resolved_[k].members[member].lop];
  }

  Instance with_network(Network net) const { return Instance(std::move(net), pools_); }

 private:
  Network net_;
  PoolSystem pools_;
  std::vector<ResolvedPool> resolved_;
};

// Dense 0/1 routing matrix of pool k, indexed [edge][member].
inline std::vector<std::vector<int>> routing_matrix(const Instance& inst,
                                                    std::size_t k) {
  const ResolvedPool& rp = inst.pool(k);
  std::vector<std::vector<int>> r(inst.num_edges(),
                                  std::vector<int>(rp.members.size(), 0));
  for (std::size_t m = 0; m < rp.members.size(); ++m) {
    for (std::size_t e : rp.members[m].edges) r[e][m] = 1;
  }
  return r;
}

// load(e) = sum over members of R(e, p) * x_p for one pool.
inline std::vector<double> pool_loads(const ResolvedPool& pool,
                                      std::size_t num_edges,
                                      std::span<const double> freqs) {
  if (freqs.size() != pool.members.size()) {
    throw InputError("frequency vector does not match pool membership");
  }
  std::vector<double> load(num_edges, 0.0);
  for (std::size_t m = 0; m < pool.members.size(); ++m) {
    for (std::size_t e : pool.members[m].edges) load[e] += freqs[m];
  }
  return load;
}

inline double path_price(const Member& member, std::span<const double> prices) {
  double mu = 0.0;
  for (std::size_t e : member.edges) mu += prices[e];
  return mu;
}

// Keyed views used at the API boundary: (lop, pool) for frequencies and
// (edge, pool) for prices.
using FrequencyMap = std::map<std::pair<std::string, std::string>, double>;
using PriceMap = std::map<std::pair<std::string, std::string>, double>;

struct EdgeLoad {
  std::vector<std::vector<double>> load;  // [pool][edge]

  double at(const Instance& inst, std::string_view edge,
            std::string_view pool) const {
    auto e = inst.network().edge_index(edge);
    auto k = inst.pools().pool_index(pool);
    if (!e || !k) throw InputError("unknown edge or pool id");
    return load[*k][*e];
  }
};

inline EdgeLoad edge_loads(const Instance& inst, const FrequencyMap& x) {
  std::vector<std::vector<double>> freqs(inst.num_pools());
  for (std::size_t k = 0; k < inst.num_pools(); ++k) {
    freqs[k].assign(inst.pool(k).members.size(), 0.0);
  }
  for (const auto& [key, value] : x) {
    auto k = inst.pools().pool_index(key.second);
    std::optional<std::size_t> m;
    if (k) m = inst.member_index(*k, key.first);
    if (!m) {
      throw InputError("frequency key (" + key.first + ", " + key.second +
                       ") is not a (lop, pool) pair of the pool system");
    }
    freqs[*k][*m] = value;
  }
  EdgeLoad out;
  out.load.reserve(inst.num_pools());
  for (std::size_t k = 0; k < inst.num_pools(); ++k) {
    out.load.push_back(pool_loads(inst.pool(k), inst.num_edges(), freqs[k]));
  }
  return out;
}

// Missing (edge, pool) entries are zero.
inline double path_price(const Instance& inst, const PriceMap& prices,
                         std::string_view lop, std::string_view pool) {
  auto k = inst.pools().pool_index(pool);
  std::optional<std::size_t> m;
  if (k) m = inst.member_index(*k, lop);
  if (!m) {
    throw InputError("lop " + std::string(lop) + " has no line in pool " +
                     std::string(pool));
  }
  double mu = 0.0;
  for (std::size_t e : inst.pool(*k).members[*m].edges) {
    auto it = prices.find({inst.network().edge(e).id, std::string(pool)});
    if (it != prices.end()) mu += it->second;
  }
  return mu;
}

}  // namespace lineplan

#endif  // LINEPLAN_NETWORK_HPP
