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

// Strictly concave per-(LOP, pool) utilities and the price-taking bid
// best response.

#ifndef LINEPLAN_UTILITY_HPP
#define LINEPLAN_UTILITY_HPP

#include <cmath>
#include <concepts>
#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "lineplan/error.hpp"
#include "lineplan/network.hpp"

namespace lineplan {

// Value, derivative, second derivative and inverse of the derivative of a
// strictly increasing, strictly concave utility on x > 0.
template <typename U>
concept ConcaveUtility = requires(const U& u, double x) {
  { u.value(x) } -> std::convertible_to<double>;
  { u.derivative(x) } -> std::convertible_to<double>;
  { u.second_derivative(x) } -> std::convertible_to<double>;
  { u.inverse_derivative(x) } -> std::convertible_to<double>;
};

// U(x) = a * sqrt(x).
class SqrtUtility {
 public:
  explicit SqrtUtility(double a) : a_(a) {
    if (!(a > 0.0) || !std::isfinite(a)) {
      throw DomainError("utility coefficient must be positive and finite");
    }
  }

  double coefficient() const { return a_; }

  double value(double x) const {
    if (x < 0.0) throw DomainError("utility of negative frequency");
    return a_ * std::sqrt(x);
  }

  double derivative(double x) const {
    if (!(x > 0.0)) throw DomainError("marginal utility requires x > 0");
    return a_ / (2.0 * std::sqrt(x));
  }

  double second_derivative(double x) const {
    if (!(x > 0.0)) throw DomainError("curvature requires x > 0");
    return -a_ / (4.0 * x * std::sqrt(x));
  }

  // x with U'(x) = mu, i.e. (a / 2mu)^2.
  double inverse_derivative(double mu) const {
    if (!(mu > 0.0)) throw DomainError("inverse marginal requires mu > 0");
    const double r = a_ / (2.0 * mu);
    return r * r;
  }

 private:
  double a_;
};

// The NOP's pseudo-utility w * log(x) for a fixed bid w.
class LogUtility {
 public:
  explicit LogUtility(double w) : w_(w) {
    if (!(w > 0.0)) throw DomainError("pseudo-utility needs a positive bid");
  }

  double value(double x) const {
    if (!(x > 0.0)) throw DomainError("log utility requires x > 0");
    return w_ * std::log(x);
  }
  double derivative(double x) const {
    if (!(x > 0.0)) throw DomainError("log utility requires x > 0");
    return w_ / x;
  }
  double second_derivative(double x) const {
    if (!(x > 0.0)) throw DomainError("log utility requires x > 0");
    return -w_ / (x * x);
  }
  double inverse_derivative(double mu) const {
    if (!(mu > 0.0)) throw DomainError("inverse marginal requires mu > 0");
    return w_ / mu;
  }

 private:
  double w_;
};

static_assert(ConcaveUtility<SqrtUtility>);
static_assert(ConcaveUtility<LogUtility>);

inline double utility(const SqrtUtility& u, double x) { return u.value(x); }
inline double marginal_utility(const SqrtUtility& u, double x) {
  return u.derivative(x);
}

// Bid maximizing U(w / mu) - w for a price taker facing path price mu:
// U'(w / mu) = mu, so w = mu * (U')^{-1}(mu).
template <ConcaveUtility U>
double best_response_bid(const U& u, double mu) {
  if (!(mu > 0.0)) {
    throw DomainError("best response undefined at non-positive path price");
  }
  return mu * u.inverse_derivative(mu);
}

// Closed form for the scaled square root: a^2 / (4 mu).
inline double best_response_bid(const SqrtUtility& u, double mu) {
  if (!(mu > 0.0)) {
    throw DomainError("best response undefined at non-positive path price");
  }
  const double a = u.coefficient();
  return a * a / (4.0 * mu);
}

// Per-(LOP, pool) utilities aligned with Instance::pool(k).members.
class UtilityTable {
 public:
  UtilityTable() = default;

  // `a` must be keyed exactly by the (lop, pool) pairs of `inst`.
  UtilityTable(const Instance& inst,
               const std::map<std::pair<std::string, std::string>, double>& a) {
    entries_.resize(inst.num_pools());
    std::size_t matched = 0;
    for (std::size_t k = 0; k < inst.num_pools(); ++k) {
      const std::string& pool = inst.pools().pool(k).id;
      for (std::size_t m = 0; m < inst.pool(k).members.size(); ++m) {
        auto it = a.find({inst.lop_id(k, m), pool});
        if (it == a.end()) {
          throw InputError("missing utility for (" + inst.lop_id(k, m) + ", " +
                           pool + ")");
        }
        entries_[k].emplace_back(it->second);
        ++matched;
      }
    }
    if (matched != a.size()) {
      throw InputError("utility table has entries for unknown (lop, pool) pairs");
    }
  }

  // Same coefficient for every member of pool k.
  static UtilityTable per_pool(const Instance& inst,
                               const std::vector<double>& coefficient) {
    if (coefficient.size() != inst.num_pools()) {
      throw InputError("one coefficient per pool required");
    }
    std::map<std::pair<std::string, std::string>, double> a;
    for (std::size_t k = 0; k < inst.num_pools(); ++k) {
      for (std::size_t m = 0; m < inst.pool(k).members.size(); ++m) {
        a[{inst.lop_id(k, m), inst.pools().pool(k).id}] = coefficient[k];
      }
    }
    return UtilityTable(inst, a);
  }

  const SqrtUtility& at(std::size_t k, std::size_t member) const {
    return entries_[k][member];
  }
  const std::vector<SqrtUtility>& pool(std::size_t k) const {
    return entries_[k];
  }
  std::size_t num_pools() const { return entries_.size(); }

  std::map<std::pair<std::string, std::string>, double> coefficients(
      const Instance& inst) const {
    std::map<std::pair<std::string, std::string>, double> out;
    for (std::size_t k = 0; k < entries_.size(); ++k) {
      for (std::size_t m = 0; m < entries_[k].size(); ++m) {
        out[{inst.lop_id(k, m), inst.pools().pool(k).id}] =
            entries_[k][m].coefficient();
      }
    }
    return out;
  }

 private:
  std::vector<std::vector<SqrtUtility>> entries_;
};

// Sum of U_{p,k}(x_{p,k}) over all pools and members.
inline double total_utility(const UtilityTable& table,
                            const std::vector<std::vector<double>>& x) {
  double sum = 0.0;
  for (std::size_t k = 0; k < table.num_pools(); ++k) {
    for (std::size_t m = 0; m < table.pool(k).size(); ++m) {
      sum += table.at(k, m).value(x[k][m]);
    }
  }
  return sum;
}

}  // namespace lineplan

#endif  // LINEPLAN_UTILITY_HPP
