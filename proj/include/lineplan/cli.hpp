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

// Command-line front end: solve, oracle, recover and generate subcommands.

#ifndef LINEPLAN_CLI_HPP
#define LINEPLAN_CLI_HPP

#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lineplan/error.hpp"
#include "lineplan/io.hpp"
#include "lineplan/multi_pool.hpp"
#include "lineplan/oracle.hpp"
#include "lineplan/scenario.hpp"

namespace lineplan {

inline constexpr int kExitOk = 0;
inline constexpr int kExitNonConverged = 1;
inline constexpr int kExitInputError = 2;

struct RunConfig {
  std::string command;
  std::string scenario;
  std::string out_dir;
  std::vector<std::uint64_t> seeds;
  std::optional<double> eta_price, eta_f, abs_tol, rel_tol, eps_cost;
  std::optional<long> max_inner, max_outer, trace_stride;
  std::optional<std::string> mode;
};

namespace cli_detail {

inline void apply_overrides(const RunConfig& rc, Scenario& s) {
  MechanismConfig& c = s.config;
  if (rc.eta_price) c.inner.price_step = *rc.eta_price;
  if (rc.eta_f) c.proportion_step = *rc.eta_f;
  if (rc.abs_tol) c.inner.abs_tol = *rc.abs_tol;
  if (rc.rel_tol) c.inner.rel_tol = *rc.rel_tol;
  if (rc.eps_cost) c.cost_tol = *rc.eps_cost;
  if (rc.max_inner) c.inner.max_iters = *rc.max_inner;
  if (rc.max_outer) c.max_outer = *rc.max_outer;
  if (rc.trace_stride) c.inner.trace_stride = *rc.trace_stride;
  if (rc.mode) s.mode = parse_mode(*rc.mode);
  if (!rc.seeds.empty()) s.seeds = rc.seeds;
}

inline std::string size_label(const Scenario& s, const Instance& inst) {
  if (s.grid) return std::to_string(s.grid->rows) + "x" + std::to_string(s.grid->cols);
  return std::to_string(inst.num_edges()) + "e";
}

inline std::string vec(const std::vector<double>& v) {
  std::string out = "(";
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + fmt6(v[i]);
  return out + ")";
}

inline std::string summary(const Instance& inst, const UtilityTable& util,
                           const MechanismResult& r) {
  std::ostringstream os;
  os << (r.converged ? "converged" : "nonconverged") << " f=" << vec(r.state.f)
     << " f_updates=" << r.f_updates << " price_updates=";
  for (std::size_t k = 0; k < r.price_updates.size(); ++k) {
    os << (k ? "," : "") << inst.pools().pool(k).id << ':' << r.price_updates[k];
  }
  os << " zeta=" << fmt6(r.state.zeta)
     << " max_kkt=" << fmt6(mechanism_kkt(inst, util, r.state).scaled.max());
  if (!r.diagnostic.empty()) os << " (" << r.diagnostic << ')';
  return os.str();
}

inline std::filesystem::path out_file(const RunConfig& rc, const std::string& stem,
                                      std::uint64_t seed, const char* ext) {
  return std::filesystem::path(rc.out_dir) / (stem + "_s" + std::to_string(seed) + ext);
}

inline int solve(const RunConfig& rc, const Scenario& s, std::ostream& out) {
  int status = kExitOk;
  for (std::uint64_t seed : s.seeds) {
    const ProblemInstance prob = build_problem(s, seed);
    const MechanismResult r = run_mechanism(prob.instance, prob.utilities, s.config);
    out << "seed " << seed << ": " << summary(prob.instance, prob.utilities, r) << '\n';
    if (!r.converged) status = kExitNonConverged;
    if (rc.out_dir.empty()) continue;
    write_json_file(out_file(rc, "final_state", seed, ".json"),
                    final_state_to_json(prob.instance, prob.utilities, r));
    std::ofstream outer(out_file(rc, "outer_trace", seed, ".csv"));
    write_outer_trace(outer, prob.instance, r.trace);
    if (s.config.inner.trace_stride > 0) {
      std::ofstream inner(out_file(rc, "inner_trace", seed, ".csv"));
      write_inner_trace(inner, prob.instance, r.last_inner);
    }
  }
  return status;
}

inline int oracle(const RunConfig& rc, const Scenario& s, std::ostream& out) {
  int status = kExitOk;
  for (std::uint64_t seed : s.seeds) {
    const ProblemInstance prob = build_problem(s, seed);
    const OracleSolution o = solve_full(prob.instance, prob.utilities);
    out << "seed " << seed << ": " << (o.converged ? "converged" : "nonconverged")
        << " objective=" << fmt6(o.objective) << " f=" << vec(o.f)
        << " zeta=" << fmt6(o.zeta) << " cost_gap=" << fmt6(o.cost_gap)
        << " max_kkt=" << fmt6(o.kkt.scaled.max()) << '\n';
    if (!o.converged) status = kExitNonConverged;
    if (!rc.out_dir.empty()) {
      write_json_file(out_file(rc, "oracle", seed, ".json"), oracle_to_json(prob.instance, o));
    }
  }
  return status;
}

inline int recover(const RunConfig& rc, const Scenario& s, std::ostream& out) {
  if (!s.disruption) throw InputError("recover needs a disruption block");
  std::optional<RecordSink> sink;
  if (!rc.out_dir.empty()) sink.emplace(std::filesystem::path(rc.out_dir) / "records.csv");
  int status = kExitOk;
  for (std::uint64_t seed : s.seeds) {
    const ProblemInstance prob = build_problem(s, seed);
    DisruptionSpec spec = *s.disruption;
    spec.seed = derive_seed(seed ^ s.disruption->seed, "recover");
    const RecoveryBaseline base = recovery_baseline(prob.instance, prob.utilities, s.config);
    if (s.clamp_disruption) {
      spec.edges = feasible_edge_count(spec.kind, base.congested.size(), spec.edges);
      if (spec.edges < 1) {
        throw InputError("seed " + std::to_string(seed) + ": too few congested edges for " +
                         to_string(spec.kind));
      }
    }
    const RecoveryOutcome r = recover_from_baseline(
        prob.instance, prob.utilities, base, spec, s.config, size_label(s, prob.instance));
    const Instance disrupted = prob.instance.with_network(
        apply_disruption(prob.instance.network(), spec, r.congested));
    auto report = [&](const char* mode, const MechanismResult& m, ExperimentRecord rec) {
      rec.seed = seed;
      out << "seed " << seed << " " << mode << ": "
          << summary(disrupted, prob.utilities, m) << " bid_updates=" << rec.bid_updates << '\n';
      if (!m.converged) status = kExitNonConverged;
      if (sink) sink->emit(rec);
    };
    if (s.mode != RunMode::kWarm) report("cold", r.cold, r.cold_record);
    if (s.mode != RunMode::kCold) report("warm", r.warm, r.warm_record);
  }
  return status;
}

inline int generate(const RunConfig& rc, const Scenario& s, std::ostream& out) {
  if (rc.out_dir.empty()) throw InputError("generate needs --out");
  for (std::uint64_t seed : s.seeds) {
    const ProblemInstance prob = build_problem(s, seed);
    Json j = network_to_json(prob.instance.network(), prob.instance.pools());
    j["utilities"] = utilities_to_json(prob.instance, prob.utilities);
    const auto path = out_file(rc, "network", seed, ".json");
    write_json_file(path, j);
    out << "seed " << seed << ": " << prob.instance.num_edges() << " edges, "
        << prob.instance.num_pools() << " pools, " << prob.instance.num_lops()
        << " lops -> " << path.string() << '\n';
  }
  return kExitOk;
}

}  // namespace cli_detail

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
  CLI::App app{"Decentralized line planning with multiple line pools"};
  app.require_subcommand(1);
  RunConfig rc;
  std::string seeds;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--scenario", rc.scenario, "scenario JSON file")->required();
    sub->add_option("--out", rc.out_dir, "output directory");
    sub->add_option("--seeds", seeds, "comma-separated seed list");
    sub->add_option("--eta-price", rc.eta_price, "fixed price step")->check(CLI::PositiveNumber);
    sub->add_option("--eta-f", rc.eta_f, "proportion step")->check(CLI::PositiveNumber);
    sub->add_option("--abs-tol", rc.abs_tol)->check(CLI::PositiveNumber);
    sub->add_option("--rel-tol", rc.rel_tol)->check(CLI::PositiveNumber);
    sub->add_option("--eps-cost", rc.eps_cost, "equal-cost tolerance")->check(CLI::PositiveNumber);
    sub->add_option("--max-inner", rc.max_inner)->check(CLI::PositiveNumber);
    sub->add_option("--max-outer", rc.max_outer)->check(CLI::PositiveNumber);
    sub->add_option("--trace-stride", rc.trace_stride)->check(CLI::NonNegativeNumber);
    sub->add_option("--mode", rc.mode)->check(CLI::IsMember({"cold", "warm", "both"}));
  };
  const std::pair<const char*, const char*> commands[] = {
      {"solve", "run the decentralized mechanism from a cold start"},
      {"oracle", "solve the centralized problem directly"},
      {"recover", "disrupt a converged instance and compare warm and cold restarts"},
      {"generate", "write the instance built from a scenario as network JSON"}};
  for (const auto& [name, help] : commands) {
    add_common(app.add_subcommand(name, help)->callback([&rc, name] { rc.command = name; }));
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInputError;
  }
  try {
    std::stringstream ss(seeds);
    for (std::string tok; std::getline(ss, tok, ',');) {
      std::size_t used = 0;
      const unsigned long long v = std::stoull(tok, &used);
      if (used != tok.size()) throw InputError("bad seed '" + tok + "'");
      rc.seeds.push_back(v);
    }
  } catch (const std::logic_error&) {
    err << "error: --seeds expects comma-separated integers\n";
    return kExitInputError;
  }
  try {
    Scenario s = load_scenario(rc.scenario);
    cli_detail::apply_overrides(rc, s);
    if (!rc.out_dir.empty()) std::filesystem::create_directories(rc.out_dir);
    if (rc.command == "solve") return cli_detail::solve(rc, s, out);
    if (rc.command == "oracle") return cli_detail::oracle(rc, s, out);
    if (rc.command == "recover") return cli_detail::recover(rc, s, out);
    return cli_detail::generate(rc, s, out);
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInputError;
  } catch (const UnsupportedError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInputError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitNonConverged;
  }
}

}  // namespace lineplan

#endif  // LINEPLAN_CLI_HPP
