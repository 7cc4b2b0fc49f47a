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

// Centralized reference solver with full knowledge of the utilities. The
// mechanism never calls into this header; it exists to certify it.
//
// For a fixed split f every pool is an independent concave program
//
//   max sum_p U_p(x_p)  s.t.  R(k) x <= c f_k,
//
// solved here by a primal log-barrier method with Newton centering. Edge
// prices are recovered from the barrier as Lambda_l = 1 / (t s_l), where s_l
// is the slack of edge l. The outer split is searched over a simplex grid
// with two rounds of local refinement.

#ifndef LINEPLAN_ORACLE_HPP
#define LINEPLAN_ORACLE_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <span>
#include <vector>

#include "lineplan/error.hpp"
#include "lineplan/multi_pool.hpp"
#include "lineplan/network.hpp"
#include "lineplan/utility.hpp"

namespace lineplan {

struct OracleOptions {
  double gap_tol = 1e-9;  // barrier gap relative to sum_p U'(x_p) x_p
  double barrier_growth = 20.0;
  int max_newton = 200;   // per centering step
  int grid = 50;          // simplex resolution 1 / grid
  int refine_rounds = 2;
  int refine_factor = 10;
};

struct PoolOptimum {
  std::vector<double> x;       // per member
  std::vector<double> prices;  // per network edge
  double objective = 0.0;
  bool converged = true;
  int newton_steps = 0;
};

// Optimum of one pool with edge capacities `capacity` (already scaled by f).
template <ConcaveUtility U>
PoolOptimum solve_pool(const ResolvedPool& pool, std::size_t num_edges,
                       std::span<const double> capacity,
                       std::span<const U> utils,
                       const OracleOptions& opt = {}) {
  const std::size_t n = pool.members.size();
  if (utils.size() != n) throw InputError("one utility per member required");
  PoolOptimum out;
  out.prices.assign(num_edges, 0.0);
  if (n == 0) return out;

  std::vector<std::size_t> rows;  // edges carrying at least one member
  for (std::size_t e = 0; e < num_edges; ++e) {
    if (!pool.edge_members[e].empty()) {
      if (!(capacity[e] > 0.0)) {
        throw DomainError("oracle needs positive capacity on used edges");
      }
      rows.push_back(e);
    }
  }
  const double m = static_cast<double>(rows.size());

  Eigen::VectorXd x(n);
  for (std::size_t p = 0; p < n; ++p) {
    double cap = std::numeric_limits<double>::infinity();
    for (std::size_t e : pool.members[p].edges) {
      cap = std::min(cap, capacity[e] /
                              static_cast<double>(pool.edge_members[e].size()));
    }
    x[p] = 0.5 * cap;
  }

  auto slacks = [&](const Eigen::VectorXd& v, std::vector<double>& s) {
    s.resize(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      double load = 0.0;
      for (std::size_t q : pool.edge_members[rows[r]]) load += v[q];
      s[r] = capacity[rows[r]] - load;
    }
  };
  auto scale_of = [&](const Eigen::VectorXd& v) {
    double w = 0.0;
    for (std::size_t p = 0; p < n; ++p) w += utils[p].derivative(v[p]) * v[p];
    return w;
  };
  auto barrier = [&](const Eigen::VectorXd& v, double t, double& value) {
    for (std::size_t p = 0; p < n; ++p) {
      if (!(v[p] > 0.0)) return false;
    }
    std::vector<double> s;
    slacks(v, s);
    double phi = 0.0;
    for (double sl : s) {
      if (!(sl > 0.0)) return false;
      phi += std::log(sl);
    }
    for (std::size_t p = 0; p < n; ++p) phi += t * utils[p].value(v[p]);
    value = phi;
    return true;
  };

  double t = m / scale_of(x);
  std::vector<double> s;
  for (;;) {
    // Newton centering on phi_t(x) = t sum U(x) + sum log s.
    bool centered = false;
    for (int it = 0; it < opt.max_newton; ++it) {
      slacks(x, s);
      Eigen::VectorXd g(n);
      Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n, n);  // -Hessian
      for (std::size_t p = 0; p < n; ++p) {
        g[p] = t * utils[p].derivative(x[p]);
        H(p, p) = -t * utils[p].second_derivative(x[p]);
      }
      for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto& members = pool.edge_members[rows[r]];
        const double inv = 1.0 / s[r];
        for (std::size_t a : members) {
          g[a] -= inv;
          for (std::size_t b : members) H(a, b) += inv * inv;
        }
      }
      const Eigen::VectorXd dx = H.ldlt().solve(g);
      const double decrement = g.dot(dx);
      ++out.newton_steps;
      if (!(decrement > 1e-10)) {
        centered = true;
        break;
      }
      double phi0 = 0.0;
      barrier(x, t, phi0);
      double step = 1.0;
      bool moved = false;
      for (int ls = 0; ls < 80; ++ls, step *= 0.5) {
        const Eigen::VectorXd cand = x + step * dx;
        double phi = 0.0;
        // Close to the centre the Armijo test drowns in round-off of phi, so
        // only the domain is enforced there.
        if (barrier(cand, t, phi) &&
            (decrement < 0.1 || phi >= phi0 + 0.25 * step * decrement)) {
          x = cand;
          moved = true;
          break;
        }
      }
      if (!moved) {
        centered = true;  // at numerical precision
        break;
      }
    }
    if (!centered) out.converged = false;
    if (m / t <= opt.gap_tol * scale_of(x)) break;
    t *= opt.barrier_growth;
  }

  slacks(x, s);
  out.x.assign(x.data(), x.data() + n);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.prices[rows[r]] = 1.0 / (t * s[r]);
  }
  for (std::size_t p = 0; p < n; ++p) out.objective += utils[p].value(x[p]);
  return out;
}

inline std::vector<double> scaled_capacities(const Network& net, double f) {
  std::vector<double> c = net.capacities();
  for (double& v : c) v *= f;
  return c;
}

// Price vector that clears a pool for fixed bids: the optimum of the NOP's
// pseudo-utility problem max sum w_p log x_p at capacity share f.
inline PoolOptimum solve_fixed_bids(const Instance& inst, std::size_t k,
                                    std::span<const double> bids, double f,
                                    const OracleOptions& opt = {}) {
  std::vector<LogUtility> utils;
  for (double w : bids) utils.emplace_back(w);
  const std::vector<double> cap = scaled_capacities(inst.network(), f);
  return solve_pool<LogUtility>(inst.pool(k), inst.num_edges(), cap, utils, opt);
}

struct FixedSplitSolution {
  std::vector<std::vector<double>> x;       // [pool][member]
  std::vector<std::vector<double>> prices;  // [pool][edge]
  std::vector<double> costs;
  double objective = 0.0;
  bool converged = true;
};

inline FixedSplitSolution solve_fixed_f(const Instance& inst,
                                        const UtilityTable& utilities,
                                        std::span<const double> f,
                                        const OracleOptions& opt = {}) {
  if (f.size() != inst.num_pools()) throw InputError("one proportion per pool");
  FixedSplitSolution out;
  for (std::size_t k = 0; k < inst.num_pools(); ++k) {
    if (!(f[k] > 0.0)) {
      if (!inst.pool(k).members.empty()) {
        throw InputError("solve_fixed_f needs f_k > 0 for populated pools");
      }
      out.x.emplace_back();
      out.prices.emplace_back(inst.num_edges(), 0.0);
      out.costs.push_back(0.0);
      continue;
    }
    const std::vector<double> cap = scaled_capacities(inst.network(), f[k]);
    PoolOptimum opt_k = solve_pool<SqrtUtility>(
        inst.pool(k), inst.num_edges(), cap, utilities.pool(k), opt);
    out.converged = out.converged && opt_k.converged;
    out.objective += opt_k.objective;
    out.costs.push_back(pool_cost(inst.network(), opt_k.prices));
    out.x.push_back(std::move(opt_k.x));
    out.prices.push_back(std::move(opt_k.prices));
  }
  return out;
}

struct KktResiduals {
  double a = 0.0;  // stationarity |U'(x) - mu|
  double b = 0.0;  // cost balance |c^T Lambda_k - zeta|
  double c = 0.0;  // complementarity |Lambda (load - c f)|
  double d = 0.0;  // |zeta (sum f - 1)|
  double e = 0.0;  // capacity violation (load - c f)^+
  double f = 0.0;  // (sum f - 1)^+
  double nonnegativity = 0.0;

  double max() const { return std::max({a, b, c, d, e, f, nonnegativity}); }
};

struct KktReport {
  KktResiduals raw;
  // (a) relative to mu, (b) relative to zeta, (c) relative to the pool's
  // spend sum_l Lambda c f, (d) and (f) on sum f, (e) relative to c f.
  KktResiduals scaled;
  std::size_t stationarity_skipped = 0;  // members with x = 0
};

inline KktReport kkt_report(const Instance& inst, const UtilityTable& utilities,
                            const std::vector<std::vector<double>>& x,
                            std::span<const double> f,
                            const std::vector<std::vector<double>>& prices,
                            double zeta) {
  const std::size_t K = inst.num_pools();
  if (x.size() != K || f.size() != K || prices.size() != K) {
    throw InputError("candidate solution does not match pool count");
  }
  const Network& net = inst.network();
  KktReport rep;
  KktResiduals& raw = rep.raw;
  KktResiduals& sc = rep.scaled;
  auto neg = [](double v) { return std::max(0.0, -v); };
  raw.nonnegativity = neg(zeta);
  double fsum = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    const ResolvedPool& pool = inst.pool(k);
    if (x[k].size() != pool.members.size() ||
        prices[k].size() != inst.num_edges()) {
      throw InputError("candidate solution does not match pool structure");
    }
    fsum += f[k];
    raw.nonnegativity = std::max(raw.nonnegativity, neg(f[k]));
    const std::vector<double> load = pool_loads(pool, inst.num_edges(), x[k]);
    double cost = 0.0;
    for (std::size_t e = 0; e < inst.num_edges(); ++e) {
      cost += net.capacity(e) * prices[k][e];
      raw.nonnegativity = std::max(raw.nonnegativity, neg(prices[k][e]));
    }
    const double spend = cost * f[k];
    for (std::size_t m = 0; m < pool.members.size(); ++m) {
      raw.nonnegativity = std::max(raw.nonnegativity, neg(x[k][m]));
      if (!(x[k][m] > 0.0)) {
        ++rep.stationarity_skipped;
        continue;
      }
      const double mu = path_price(pool.members[m], prices[k]);
      const double gap = std::abs(utilities.at(k, m).derivative(x[k][m]) - mu);
      raw.a = std::max(raw.a, gap);
      sc.a = std::max(sc.a, mu > 0.0 ? gap / mu
                                     : std::numeric_limits<double>::infinity());
    }
    raw.b = std::max(raw.b, std::abs(cost - zeta));
    sc.b = std::max(sc.b, zeta > 0.0 ? std::abs(cost - zeta) / zeta
                                     : std::abs(cost - zeta));
    for (std::size_t e = 0; e < inst.num_edges(); ++e) {
      const double cf = net.capacity(e) * f[k];
      const double excess = load[e] - cf;
      const double comp = std::abs(prices[k][e] * excess);
      raw.c = std::max(raw.c, comp);
      sc.c = std::max(sc.c, spend > 0.0 ? comp / spend : comp);
      const double over = std::max(0.0, excess);
      raw.e = std::max(raw.e, over);
      sc.e = std::max(sc.e, over / (cf > 0.0 ? cf : net.capacity(e)));
    }
  }
  raw.d = std::abs(zeta * (fsum - 1.0));
  sc.d = std::abs(fsum - 1.0);
  raw.f = std::max(0.0, fsum - 1.0);
  sc.f = raw.f;
  sc.nonnegativity = raw.nonnegativity;
  return rep;
}

struct OracleSolution {
  std::vector<std::vector<double>> x;
  std::vector<double> f;
  std::vector<std::vector<double>> prices;
  std::vector<double> costs;
  double zeta = 0.0;  // max_k c^T Lambda_k
  double objective = 0.0;
  double cost_gap = 0.0;  // (max - mean) cost / max
  KktReport kkt;
  bool converged = true;
};

namespace detail {

// Pool objective as a function of its proportion, memoized per value.
class PoolObjectiveCache {
 public:
  PoolObjectiveCache(const Instance& inst, const UtilityTable& utilities,
                     const OracleOptions& opt)
      : inst_(inst), utilities_(utilities), opt_(opt), memo_(inst.num_pools()) {}

  double operator()(std::size_t k, double f) {
    auto it = memo_[k].find(f);
    if (it != memo_[k].end()) return it->second;
    double value = 0.0;
    if (f > 0.0 && !inst_.pool(k).members.empty()) {
      const std::vector<double> cap = scaled_capacities(inst_.network(), f);
      value = solve_pool<SqrtUtility>(inst_.pool(k), inst_.num_edges(), cap,
                                      utilities_.pool(k), opt_)
                  .objective;
    }
    memo_[k].emplace(f, value);
    return value;
  }

 private:
  const Instance& inst_;
  const UtilityTable& utilities_;
  const OracleOptions& opt_;
  std::vector<std::map<double, double>> memo_;
};

// Calls visit(f) for every composition of `total` into `parts` integer
// parts, in lexicographic order, scaled by 1 / total.
inline void for_each_composition(int parts, int total,
                                 const std::function<void(const std::vector<double>&)>& visit) {
  std::vector<int> c(parts, 0);
  std::vector<double> f(parts);
  std::function<void(int, int)> rec = [&](int i, int left) {
    if (i == parts - 1) {
      c[i] = left;
      for (int j = 0; j < parts; ++j) f[j] = static_cast<double>(c[j]) / total;
      visit(f);
      return;
    }
    for (int v = 0; v <= left; ++v) {
      c[i] = v;
      rec(i + 1, left - v);
    }
  };
  rec(0, total);
}

}  // namespace detail

inline OracleSolution solve_full(const Instance& inst,
                                 const UtilityTable& utilities,
                                 const OracleOptions& opt = {}) {
  const std::size_t K = inst.num_pools();
  if (K == 0) throw InputError("instance has no pools");
  if (K > 4) throw UnsupportedError("oracle grid search supports at most 4 pools");
  detail::PoolObjectiveCache value(inst, utilities, opt);
  auto objective = [&](const std::vector<double>& f) {
    double v = 0.0;
    for (std::size_t k = 0; k < K; ++k) v += value(k, f[k]);
    return v;
  };

  std::vector<double> best(K, 1.0);
  double best_value = -std::numeric_limits<double>::infinity();
  auto consider = [&](const std::vector<double>& f) {
    const double v = objective(f);
    if (v > best_value) {
      best_value = v;
      best = f;
    }
  };
  if (K == 1) {
    consider(best);
  } else {
    detail::for_each_composition(static_cast<int>(K), opt.grid, consider);
    double h = 1.0 / opt.grid;
    for (int round = 0; round < opt.refine_rounds; ++round) {
      const std::vector<double> centre = best;
      const double fine = h / opt.refine_factor;
      const int span = opt.refine_factor;
      std::vector<int> off(K - 1, -span);
      for (;;) {
        std::vector<double> f(K);
        double partial = 0.0;
        bool ok = true;
        for (std::size_t k = 0; k + 1 < K; ++k) {
          f[k] = centre[k] + off[k] * fine;
          if (f[k] < 0.0 || f[k] > 1.0) ok = false;
          partial += f[k];
        }
        f[K - 1] = 1.0 - partial;
        if (f[K - 1] < -1e-15) ok = false;
        f[K - 1] = std::max(0.0, f[K - 1]);
        if (ok) consider(f);
        // Odometer with off[0] most significant: lexicographic in f.
        std::ptrdiff_t d = static_cast<std::ptrdiff_t>(K) - 2;
        for (; d >= 0; --d) {
          if (++off[d] <= span) break;
          off[d] = -span;
        }
        if (d < 0) break;
      }
      h = fine;
    }
  }

  FixedSplitSolution fixed = solve_fixed_f(inst, utilities, best, opt);
  OracleSolution out;
  out.f = best;
  out.x = std::move(fixed.x);
  out.prices = std::move(fixed.prices);
  out.costs = fixed.costs;
  out.objective = fixed.objective;
  out.converged = fixed.converged;
  const auto hi = *std::max_element(out.costs.begin(), out.costs.end());
  out.zeta = hi;
  out.cost_gap = hi > 0.0 ? (hi - mean(out.costs)) / hi : 0.0;
  out.kkt = kkt_report(inst, utilities, out.x, out.f, out.prices, out.zeta);
  return out;
}

}  // namespace lineplan

#endif  // LINEPLAN_ORACLE_HPP
