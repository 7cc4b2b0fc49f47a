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

// JSON scenario and network files, final-state and oracle dumps, trace and
// record CSVs.

#ifndef LINEPLAN_IO_HPP
#define LINEPLAN_IO_HPP

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "json.hpp"
#include "lineplan/error.hpp"
#include "lineplan/multi_pool.hpp"
#include "lineplan/network.hpp"
#include "lineplan/oracle.hpp"
#include "lineplan/scenario.hpp"
#include "lineplan/utility.hpp"

namespace lineplan {

using Json = nlohmann::json;

// Raised for unreadable or malformed input files; exit status 2 in the CLI.
class IoError : public InputError {
 public:
  using InputError::InputError;
};

namespace io_detail {

inline std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

inline std::string index(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

[[noreturn]] inline void fail(const std::string& path, const std::string& what) {
  throw IoError("field '" + path + "': " + what);
}

inline const Json& field(const Json& j, const std::string& key,
                         const std::string& path) {
  if (!j.is_object()) fail(path, "expected object");
  auto it = j.find(key);
  if (it == j.end()) fail(join(path, key), "missing");
  return *it;
}

inline double number(const Json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected number");
  return j.get<double>();
}

inline long integer(const Json& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path, "expected integer");
  return j.get<long>();
}

inline std::string text(const Json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected string");
  return j.get<std::string>();
}

inline const Json& array(const Json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected array");
  return j;
}

inline void known_keys(const Json& j, std::initializer_list<std::string_view> keys,
                       const std::string& path) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (std::string_view k : keys) ok = ok || it.key() == k;
    if (!ok) fail(join(path, it.key()), "unknown field");
  }
}

inline double positive(const Json& j, const std::string& path) {
  const double v = number(j, path);
  if (!(v > 0.0)) fail(path, "must be positive");
  return v;
}

inline long positive_integer(const Json& j, const std::string& path) {
  const long v = integer(j, path);
  if (v < 1) fail(path, "must be positive");
  return v;
}

}  // namespace io_detail

inline Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

// {"nodes": [...], "edges": [{id, tail, head, capacity}], "pools": [...]}
inline Network parse_network(const Json& j, const std::string& path = "") {
  using namespace io_detail;
  std::vector<std::string> nodes;
  const Json& jn = array(field(j, "nodes", path), join(path, "nodes"));
  for (std::size_t i = 0; i < jn.size(); ++i) {
    nodes.push_back(text(jn[i], index(join(path, "nodes"), i)));
  }
  std::vector<Edge> edges;
  const Json& je = array(field(j, "edges", path), join(path, "edges"));
  for (std::size_t i = 0; i < je.size(); ++i) {
    const std::string p = index(join(path, "edges"), i);
    known_keys(je[i], {"id", "tail", "head", "capacity"}, p);
    edges.push_back({text(field(je[i], "id", p), join(p, "id")),
                     text(field(je[i], "tail", p), join(p, "tail")),
                     text(field(je[i], "head", p), join(p, "head")),
                     number(field(je[i], "capacity", p), join(p, "capacity"))});
  }
  return Network(std::move(nodes), std::move(edges));
}

// {"pools": [{"id": ..., "lines": [{"lop": ..., "edges": [...]}]}]}
inline PoolSystem parse_pools(const Json& j, const std::string& path = "") {
  using namespace io_detail;
  std::vector<Pool> pools;
  const std::string pp = join(path, "pools");
  const Json& jp = array(field(j, "pools", path), pp);
  for (std::size_t k = 0; k < jp.size(); ++k) {
    const std::string p = index(pp, k);
    known_keys(jp[k], {"id", "lines"}, p);
    Pool pool;
    pool.id = text(field(jp[k], "id", p), join(p, "id"));
    const Json& jl = array(field(jp[k], "lines", p), join(p, "lines"));
    for (std::size_t i = 0; i < jl.size(); ++i) {
      const std::string lp = index(join(p, "lines"), i);
      known_keys(jl[i], {"lop", "edges"}, lp);
      PoolLine pl;
      pl.lop = text(field(jl[i], "lop", lp), join(lp, "lop"));
      const Json& ids = array(field(jl[i], "edges", lp), join(lp, "edges"));
      for (std::size_t e = 0; e < ids.size(); ++e) {
        pl.line.edges.push_back(text(ids[e], index(join(lp, "edges"), e)));
      }
      pool.lines.push_back(std::move(pl));
    }
    pools.push_back(std::move(pool));
  }
  return PoolSystem(std::move(pools));
}

inline Json network_to_json(const Network& net, const PoolSystem& pools) {
  Json j;
  j["nodes"] = net.nodes();
  j["edges"] = Json::array();
  for (const Edge& e : net.edges()) {
    j["edges"].push_back(
        {{"id", e.id}, {"tail", e.tail}, {"head", e.head}, {"capacity", e.capacity}});
  }
  j["pools"] = Json::array();
  for (const Pool& pool : pools.pools()) {
    Json jp{{"id", pool.id}, {"lines", Json::array()}};
    for (const PoolLine& pl : pool.lines) {
      jp["lines"].push_back({{"lop", pl.lop}, {"edges", pl.line.edges}});
    }
    j["pools"].push_back(std::move(jp));
  }
  return j;
}

// Utility specification: an explicit [{lop, pool, a}] list, one coefficient
// per pool, or a named two-pool scenario S1..S4.
struct UtilitySpec {
  std::map<std::pair<std::string, std::string>, double> explicit_a;
  std::vector<double> per_pool;
  int scenario = 0;
};

inline UtilitySpec parse_utilities(const Json& j, const std::string& path) {
  using namespace io_detail;
  UtilitySpec spec;
  if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) {
      const std::string p = index(path, i);
      known_keys(j[i], {"lop", "pool", "a"}, p);
      const auto key = std::make_pair(text(field(j[i], "lop", p), join(p, "lop")),
                                      text(field(j[i], "pool", p), join(p, "pool")));
      if (!spec.explicit_a.emplace(key, number(field(j[i], "a", p), join(p, "a"))).second) {
        fail(p, "duplicate utility for (" + key.first + ", " + key.second + ")");
      }
    }
    return spec;
  }
  if (!j.is_object()) fail(path, "expected array or object");
  known_keys(j, {"per_pool", "scenario"}, path);
  if (j.contains("per_pool")) {
    const Json& jp = array(j["per_pool"], join(path, "per_pool"));
    for (std::size_t k = 0; k < jp.size(); ++k) {
      spec.per_pool.push_back(number(jp[k], index(join(path, "per_pool"), k)));
    }
  } else if (j.contains("scenario")) {
    const std::string s = text(j["scenario"], join(path, "scenario"));
    if (s.size() != 2 || s[0] != 'S' || s[1] < '1' || s[1] > '4') {
      fail(join(path, "scenario"), "expected S1..S4");
    }
    spec.scenario = s[1] - '0';
  } else {
    fail(path, "expected per_pool or scenario");
  }
  return spec;
}

inline UtilityTable build_utilities(const Instance& inst, const UtilitySpec& spec) {
  if (!spec.explicit_a.empty()) return UtilityTable(inst, spec.explicit_a);
  if (!spec.per_pool.empty()) return UtilityTable::per_pool(inst, spec.per_pool);
  if (spec.scenario != 0) {
    return UtilityTable::per_pool(inst, scenario_coefficients(spec.scenario));
  }
  throw InputError("no utilities given");
}

inline Json utilities_to_json(const Instance& inst, const UtilityTable& table) {
  Json j = Json::array();
  for (const auto& [key, a] : table.coefficients(inst)) {
    j.push_back({{"lop", key.first}, {"pool", key.second}, {"a", a}});
  }
  return j;
}

inline GridSpec parse_grid(const Json& j, const std::string& path) {
  using namespace io_detail;
  known_keys(j, {"rows", "cols", "capacity_range", "lines_per_pool", "pools",
                 "shared_first_edge", "perturb_fraction", "seed"},
             path);
  GridSpec g;
  if (j.contains("rows")) g.rows = static_cast<int>(integer(j["rows"], join(path, "rows")));
  if (j.contains("cols")) g.cols = static_cast<int>(integer(j["cols"], join(path, "cols")));
  if (j.contains("capacity_range")) {
    const std::string p = join(path, "capacity_range");
    const Json& r = array(j["capacity_range"], p);
    if (r.size() != 2) fail(p, "expected [lo, hi]");
    g.capacity_lo = number(r[0], index(p, 0));
    g.capacity_hi = number(r[1], index(p, 1));
  }
  if (j.contains("lines_per_pool")) {
    g.lines_per_pool = static_cast<int>(
        positive_integer(j["lines_per_pool"], join(path, "lines_per_pool")));
  }
  if (j.contains("pools")) {
    g.pools = static_cast<int>(positive_integer(j["pools"], join(path, "pools")));
  }
  if (j.contains("shared_first_edge")) {
    const std::string p = join(path, "shared_first_edge");
    const Json& s = array(j["shared_first_edge"], p);
    if (s.size() != 2 || !s[0].is_array() || !s[1].is_array() || s[0].size() != 2 ||
        s[1].size() != 2) {
      fail(p, "expected [[x, y], [x, y]]");
    }
    g.shared_from = {static_cast<int>(integer(s[0][0], p)), static_cast<int>(integer(s[0][1], p))};
    g.shared_to = {static_cast<int>(integer(s[1][0], p)), static_cast<int>(integer(s[1][1], p))};
  }
  if (j.contains("perturb_fraction")) {
    g.perturb_fraction = number(j["perturb_fraction"], join(path, "perturb_fraction"));
  }
  if (j.contains("seed")) {
    g.seed = static_cast<std::uint64_t>(integer(j["seed"], join(path, "seed")));
  }
  try {
    validate_grid_spec(g);
  } catch (const InputError& e) {
    fail(path, e.what());
  }
  return g;
}

inline void parse_config(const Json& j, const std::string& path, MechanismConfig& cfg) {
  using namespace io_detail;
  known_keys(j, {"eta_price", "step_safety", "abs_tol", "rel_tol", "bid_refresh_period",
                 "max_inner", "initial_bid", "material_bid_change", "trace_stride",
                 "eta_f", "eps_cost", "f_floor", "max_outer", "rule", "parallel"},
             path);
  auto num = [&](const char* key, auto& dst) {
    if (j.contains(key)) dst = positive(j[key], join(path, key));
  };
  auto cnt = [&](const char* key, long& dst) {
    if (j.contains(key)) dst = positive_integer(j[key], join(path, key));
  };
  if (j.contains("eta_price")) cfg.inner.price_step = positive(j["eta_price"], join(path, "eta_price"));
  if (j.contains("step_safety")) cfg.inner.step_safety = positive(j["step_safety"], join(path, "step_safety"));
  num("abs_tol", cfg.inner.abs_tol);
  num("rel_tol", cfg.inner.rel_tol);
  cnt("bid_refresh_period", cfg.inner.bid_refresh_period);
  cnt("max_inner", cfg.inner.max_iters);
  num("initial_bid", cfg.inner.initial_bid);
  num("material_bid_change", cfg.inner.material_bid_change);
  if (j.contains("trace_stride")) {
    cfg.inner.trace_stride = integer(j["trace_stride"], join(path, "trace_stride"));
    if (cfg.inner.trace_stride < 0) fail(join(path, "trace_stride"), "must be >= 0");
  }
  num("eta_f", cfg.proportion_step);
  num("eps_cost", cfg.cost_tol);
  num("f_floor", cfg.f_floor);
  cnt("max_outer", cfg.max_outer);
  if (j.contains("rule")) {
    const std::string r = text(j["rule"], join(path, "rule"));
    if (r == "relative") {
      cfg.rule = ProportionRule::kRelativeExcess;
    } else if (r == "absolute") {
      cfg.rule = ProportionRule::kAbsoluteExcess;
    } else {
      fail(join(path, "rule"), "expected relative or absolute");
    }
  }
  if (j.contains("parallel")) {
    if (!j["parallel"].is_boolean()) fail(join(path, "parallel"), "expected boolean");
    cfg.parallel = j["parallel"].get<bool>();
  }
}

enum class RunMode { kCold, kWarm, kBoth };

inline RunMode parse_mode(std::string_view s) {
  if (s == "cold") return RunMode::kCold;
  if (s == "warm") return RunMode::kWarm;
  if (s == "both") return RunMode::kBoth;
  throw InputError("mode must be cold, warm or both");
}

struct Scenario {
  std::string name;
  std::optional<GridSpec> grid;
  std::optional<Network> network;
  std::optional<PoolSystem> pools;
  std::optional<std::size_t> collapse_to;
  UtilitySpec utilities;
  std::optional<DisruptionSpec> disruption;
  // Shrink the disruption edge count to what the congested set supports.
  bool clamp_disruption = false;
  RunMode mode = RunMode::kBoth;
  std::vector<std::uint64_t> seeds{1};
  MechanismConfig config;
};

inline Scenario parse_scenario(const Json& j, const std::filesystem::path& base_dir) {
  using namespace io_detail;
  if (!j.is_object()) fail("", "scenario must be an object");
  known_keys(j, {"name", "grid", "network_file", "network", "collapse_to_pool",
                 "utilities", "disruption", "mode", "seeds", "config"},
             "");
  Scenario s;
  if (j.contains("name")) s.name = text(j["name"], "name");
  const int sources = static_cast<int>(j.contains("grid")) +
                      static_cast<int>(j.contains("network_file")) +
                      static_cast<int>(j.contains("network"));
  if (sources != 1) fail("", "exactly one of grid, network_file, network is required");
  if (j.contains("grid")) {
    s.grid = parse_grid(j["grid"], "grid");
  } else {
    Json net_json;
    std::string path = "network";
    if (j.contains("network_file")) {
      std::filesystem::path file = text(j["network_file"], "network_file");
      if (file.is_relative()) file = base_dir / file;
      net_json = read_json_file(file);
      path = "";
    } else {
      net_json = j["network"];
    }
    s.network = parse_network(net_json, path);
    s.pools = parse_pools(net_json, path);
  }
  if (j.contains("collapse_to_pool")) {
    const long k = integer(j["collapse_to_pool"], "collapse_to_pool");
    if (k < 0) fail("collapse_to_pool", "must be >= 0");
    s.collapse_to = static_cast<std::size_t>(k);
  }
  s.utilities = parse_utilities(field(j, "utilities", ""), "utilities");
  if (j.contains("disruption")) {
    const Json& d = j["disruption"];
    known_keys(d, {"scenario", "edges", "magnitude", "seed", "clamp_edges"}, "disruption");
    DisruptionSpec ds;
    try {
      ds.kind = parse_disruption(text(field(d, "scenario", "disruption"), "disruption.scenario"));
    } catch (const InputError& e) {
      fail("disruption.scenario", e.what());
    }
    if (d.contains("edges")) ds.edges = static_cast<int>(positive_integer(d["edges"], "disruption.edges"));
    if (d.contains("magnitude")) {
      ds.magnitude = number(d["magnitude"], "disruption.magnitude");
      if (ds.magnitude < 0.0 || ds.magnitude > 1.0) fail("disruption.magnitude", "must lie in [0, 1]");
    }
    if (d.contains("seed")) ds.seed = static_cast<std::uint64_t>(integer(d["seed"], "disruption.seed"));
    if (d.contains("clamp_edges")) {
      if (!d["clamp_edges"].is_boolean()) fail("disruption.clamp_edges", "expected boolean");
      s.clamp_disruption = d["clamp_edges"].get<bool>();
    }
    s.disruption = ds;
  }
  if (j.contains("mode")) {
    try {
      s.mode = parse_mode(text(j["mode"], "mode"));
    } catch (const InputError& e) {
      fail("mode", e.what());
    }
  }
  if (j.contains("seeds")) {
    s.seeds.clear();
    const Json& js = array(j["seeds"], "seeds");
    for (std::size_t i = 0; i < js.size(); ++i) {
      const long v = integer(js[i], index("seeds", i));
      if (v < 0) fail(index("seeds", i), "must be >= 0");
      s.seeds.push_back(static_cast<std::uint64_t>(v));
    }
    if (s.seeds.empty()) fail("seeds", "must not be empty");
  }
  if (j.contains("config")) parse_config(j["config"], "config", s.config);
  return s;
}

inline Scenario load_scenario(const std::filesystem::path& path) {
  const Json j = read_json_file(path);
  try {
    return parse_scenario(j, path.parent_path());
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

// Builds the instance for one seed. Grid scenarios use the seed as the
// generator seed; file scenarios ignore it.
inline ProblemInstance build_problem(const Scenario& s, std::uint64_t seed) {
  Network net;
  PoolSystem pools;
  if (s.grid) {
    GridSpec g = *s.grid;
    g.seed = seed;
    std::tie(net, pools) = generate_grid(g);
  } else {
    net = *s.network;
    pools = *s.pools;
  }
  if (s.collapse_to) pools = collapse_to_pool(pools, *s.collapse_to);
  Instance inst(std::move(net), std::move(pools));
  UtilityTable table = build_utilities(inst, s.utilities);
  return {std::move(inst), std::move(table)};
}

inline Json kkt_to_json(const KktResiduals& r) {
  return {{"a", r.a}, {"b", r.b}, {"c", r.c}, {"d", r.d}, {"e", r.e}, {"f", r.f},
          {"nonnegativity", r.nonnegativity}, {"max", r.max()}};
}

inline Json kkt_report_to_json(const KktReport& rep) {
  return {{"raw", kkt_to_json(rep.raw)}, {"scaled", kkt_to_json(rep.scaled)},
          {"stationarity_skipped", rep.stationarity_skipped}};
}

inline Json final_state_to_json(const Instance& inst, const UtilityTable& util,
                                const MechanismResult& r) {
  const OuterState& st = r.state;
  Json j;
  j["converged"] = r.converged;
  if (!r.diagnostic.empty()) j["diagnostic"] = r.diagnostic;
  j["f_updates"] = r.f_updates;
  j["price_updates"] = r.price_updates;
  j["bid_updates"] = r.bid_updates;
  j["zeta"] = st.zeta;
  j["pools"] = Json::array();
  const Network& net = inst.network();
  for (std::size_t k = 0; k < inst.num_pools(); ++k) {
    const PoolMarketState& p = st.pools[k];
    Json jp{{"id", inst.pools().pool(k).id}, {"f", st.f[k]}, {"cost", st.costs[k]}};
    jp["prices"] = Json::object();
    for (std::size_t e = 0; e < net.num_edges(); ++e) jp["prices"][net.edge(e).id] = p.prices[e];
    jp["lines"] = Json::array();
    for (std::size_t m = 0; m < p.freqs.size(); ++m) {
      jp["lines"].push_back({{"lop", inst.lop_id(k, m)}, {"x", p.freqs[m]}, {"bid", p.bids[m]}});
    }
    j["pools"].push_back(std::move(jp));
  }
  j["objective"] = total_utility(util, frequencies(st));
  j["kkt"] = kkt_report_to_json(mechanism_kkt(inst, util, st));
  return j;
}

// Reads back what final_state_to_json wrote.
inline OuterState outer_state_from_json(const Instance& inst, const Json& j) {
  using namespace io_detail;
  OuterState st;
  const Json& jp = array(field(j, "pools", ""), "pools");
  if (jp.size() != inst.num_pools()) fail("pools", "pool count mismatch");
  const Network& net = inst.network();
  for (std::size_t k = 0; k < jp.size(); ++k) {
    const std::string p = index("pools", k);
    if (text(field(jp[k], "id", p), join(p, "id")) != inst.pools().pool(k).id) {
      fail(join(p, "id"), "pool order mismatch");
    }
    PoolMarketState ps;
    ps.proportion = number(field(jp[k], "f", p), join(p, "f"));
    st.f.push_back(ps.proportion);
    ps.prices.resize(net.num_edges());
    const Json& prices = field(jp[k], "prices", p);
    for (std::size_t e = 0; e < net.num_edges(); ++e) {
      ps.prices[e] = number(field(prices, net.edge(e).id, join(p, "prices")),
                            join(join(p, "prices"), net.edge(e).id));
    }
    const Json& lines = array(field(jp[k], "lines", p), join(p, "lines"));
    if (lines.size() != inst.pool(k).members.size()) fail(join(p, "lines"), "member count mismatch");
    for (std::size_t m = 0; m < lines.size(); ++m) {
      const std::string lp = index(join(p, "lines"), m);
      ps.freqs.push_back(number(field(lines[m], "x", lp), join(lp, "x")));
      ps.bids.push_back(number(field(lines[m], "bid", lp), join(lp, "bid")));
    }
    st.costs.push_back(pool_cost(net, ps.prices));
    st.pools.push_back(std::move(ps));
  }
  st.zeta = number(field(j, "zeta", ""), "zeta");
  return st;
}

inline Json oracle_to_json(const Instance& inst, const OracleSolution& o) {
  Json j;
  j["converged"] = o.converged;
  j["objective"] = o.objective;
  j["zeta"] = o.zeta;
  j["cost_gap"] = o.cost_gap;
  j["pools"] = Json::array();
  const Network& net = inst.network();
  for (std::size_t k = 0; k < inst.num_pools(); ++k) {
    Json jp{{"id", inst.pools().pool(k).id}, {"f", o.f[k]}, {"cost", o.costs[k]}};
    jp["prices"] = Json::object();
    for (std::size_t e = 0; e < net.num_edges(); ++e) jp["prices"][net.edge(e).id] = o.prices[k][e];
    jp["lines"] = Json::array();
    for (std::size_t m = 0; m < o.x[k].size(); ++m) {
      jp["lines"].push_back({{"lop", inst.lop_id(k, m)}, {"x", o.x[k][m]}});
    }
    j["pools"].push_back(std::move(jp));
  }
  j["kkt"] = kkt_report_to_json(o.kkt);
  return j;
}

inline void write_json_file(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

inline std::string fmt6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// outer_iter, f per pool, cost per pool, zeta, cumulative price updates
inline void write_outer_trace(std::ostream& out, const Instance& inst,
                              const std::vector<OuterTraceRow>& rows) {
  out << "outer_iter";
  for (const Pool& p : inst.pools().pools()) out << ",f_" << p.id;
  for (const Pool& p : inst.pools().pools()) out << ",cost_" << p.id;
  out << ",zeta,price_updates\n";
  for (const OuterTraceRow& r : rows) {
    out << r.outer_iter;
    for (double v : r.f) out << ',' << fmt6(v);
    for (double v : r.costs) out << ',' << fmt6(v);
    out << ',' << fmt6(r.zeta) << ',' << r.cumulative_price_updates << '\n';
  }
}

// pool, iter, max_excess, then one price column per edge
inline void write_inner_trace(std::ostream& out, const Instance& inst,
                              const std::vector<SinglePoolResult>& pools) {
  const Network& net = inst.network();
  out << "pool,iter,max_excess";
  for (const Edge& e : net.edges()) out << ",lambda_" << e.id;
  out << '\n';
  for (std::size_t k = 0; k < pools.size(); ++k) {
    for (const PoolTraceSample& s : pools[k].trace) {
      out << inst.pools().pool(k).id << ',' << s.iter << ',' << fmt6(s.max_excess);
      for (double v : s.prices) out << ',' << fmt6(v);
      out << '\n';
    }
  }
}

inline constexpr const char* kRecordHeader =
    "scenario,size,mode,magnitude,seed,status,f_updates,price_updates,"
    "price_updates_total,bid_updates,max_kkt\n";

inline std::string record_row(const ExperimentRecord& r) {
  std::ostringstream row;
  long total = 0;
  std::string per_pool;
  for (std::size_t k = 0; k < r.price_updates.size(); ++k) {
    if (k > 0) per_pool += ';';
    per_pool += std::to_string(r.price_updates[k]);
    total += r.price_updates[k];
  }
  row << r.scenario << ',' << r.size << ',' << r.mode << ',' << fmt6(r.magnitude) << ','
      << r.seed << ',' << (r.converged ? "converged" : "nonconverged") << ','
      << r.f_updates << ',' << per_pool << ',' << total << ',' << r.bid_updates << ','
      << fmt6(r.max_kkt) << '\n';
  return row.str();
}

// Appends records to a CSV file, writing the header only into an empty file.
class RecordSink {
 public:
  explicit RecordSink(std::filesystem::path path) : path_(std::move(path)) {
    std::error_code ec;
    header_done_ = std::filesystem::exists(path_, ec) &&
                   std::filesystem::file_size(path_, ec) > 0;
  }

  std::size_t emit(const ExperimentRecord& r) {
    std::ofstream out(path_, std::ios::app);
    if (!out) throw std::runtime_error("cannot open record file '" + path_.string() + "'");
    std::string bytes = header_done_ ? "" : kRecordHeader;
    bytes += record_row(r);
    out << bytes;
    out.flush();
    if (!out) throw std::runtime_error("write failed for '" + path_.string() + "'");
    header_done_ = true;
    return bytes.size();
  }

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  bool header_done_ = false;
};

}  // namespace lineplan

#endif  // LINEPLAN_IO_HPP
