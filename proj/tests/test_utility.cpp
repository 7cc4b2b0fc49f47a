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
#include <limits>

#include "fixtures.hpp"
#include "lineplan/rng.hpp"
#include "lineplan/utility.hpp"

namespace lineplan {
namespace {

TEST(Utility, Values) {
  EXPECT_DOUBLE_EQ(utility(SqrtUtility(1e4), 4.0), 2e4);
  EXPECT_EQ(utility(SqrtUtility(2), 0.0), 0.0);
  EXPECT_DOUBLE_EQ(utility(SqrtUtility(2), 1.0), 2.0);
  EXPECT_THROW(utility(SqrtUtility(2), -1.0), DomainError);
}

TEST(Utility, RejectsBadCoefficient) {
  EXPECT_THROW(SqrtUtility(0.0), DomainError);
  EXPECT_THROW(SqrtUtility(-1.0), DomainError);
  const double inf = std::numeric_limits<double>::infinity();
  EXPECT_THROW(SqrtUtility{inf}, DomainError);
}

TEST(Utility, Marginal) {
  EXPECT_DOUBLE_EQ(marginal_utility(SqrtUtility(2), 4.0), 0.5);
  EXPECT_DOUBLE_EQ(marginal_utility(SqrtUtility(2), 1.0), 1.0);
  EXPECT_THROW(marginal_utility(SqrtUtility(2), 0.0), DomainError);
}

TEST(Utility, MarginalMatchesCentralDifference) {
  const SqrtUtility u(3);
  const double h = 1e-5, x = 2.0;
  const double fd = (utility(u, x + h) - utility(u, x - h)) / (2 * h);
  EXPECT_NEAR(fd, marginal_utility(u, x), 1e-6);
}

TEST(BestResponse, Examples) {
  EXPECT_DOUBLE_EQ(best_response_bid(SqrtUtility(2), 1.0), 1.0);
  EXPECT_DOUBLE_EQ(best_response_bid(SqrtUtility(2), 0.5), 2.0);
  EXPECT_DOUBLE_EQ(best_response_bid(SqrtUtility(1e4), 50.0), 5e5);
  EXPECT_THROW(best_response_bid(SqrtUtility(2), 0.0), DomainError);
  EXPECT_THROW(best_response_bid(SqrtUtility(2), -1.0), DomainError);
}

TEST(BestResponse, GenericFormAgreesWithClosedForm) {
  Rng rng(3);
  for (int i = 0; i < 500; ++i) {
    const SqrtUtility u(rng.uniform(0.1, 1e4));
    const double mu = rng.uniform(1e-3, 1e3);
    const double closed = best_response_bid(u, mu);
    const double generic = best_response_bid<SqrtUtility>(u, mu);
    EXPECT_NEAR(generic, closed, 1e-12 * closed);
  }
}

TEST(BestResponseProperties, ImpliedFrequencyIsStationary) {
  Rng rng(4);
  for (int i = 0; i < 2000; ++i) {
    const SqrtUtility u(rng.uniform(0.01, 1e5));
    const double mu = std::exp(rng.uniform(-8.0, 8.0));
    const double x = best_response_bid(u, mu) / mu;
    EXPECT_NEAR(marginal_utility(u, x), mu, 1e-9 * mu);
  }
}

TEST(BestResponseProperties, MonotoneAndQuadraticScaling) {
  Rng rng(5);
  for (int i = 0; i < 1000; ++i) {
    const double a = rng.uniform(0.1, 100.0);
    const double mu = rng.uniform(0.01, 10.0);
    const double d = rng.uniform(0.01, 5.0);
    const double c = rng.uniform(0.1, 10.0);
    EXPECT_GT(best_response_bid(SqrtUtility(a), mu), best_response_bid(SqrtUtility(a), mu + d));
    EXPECT_LT(best_response_bid(SqrtUtility(a), mu), best_response_bid(SqrtUtility(a + d), mu));
    const double base = best_response_bid(SqrtUtility(a), mu);
    EXPECT_NEAR(best_response_bid(SqrtUtility(c * a), mu), c * c * base, 1e-12 * c * c * base);
  }
}

TEST(BestResponseProperties, BidMaximizesPayoff) {
  Rng rng(6);
  for (int i = 0; i < 300; ++i) {
    const SqrtUtility u(rng.uniform(0.5, 5.0));
    const double mu = rng.uniform(0.1, 3.0);
    const double w = best_response_bid(u, mu);
    const double best = utility(u, w / mu) - w;
    for (double s : {0.5, 0.9, 0.99, 1.01, 1.1, 2.0}) {
      EXPECT_LE(utility(u, s * w / mu) - s * w, best + 1e-12);
    }
  }
}

TEST(LogUtility, Derivatives) {
  const LogUtility u(3.0);
  EXPECT_DOUBLE_EQ(u.derivative(2.0), 1.5);
  EXPECT_DOUBLE_EQ(u.inverse_derivative(1.5), 2.0);
  EXPECT_DOUBLE_EQ(best_response_bid(u, 7.0), 3.0);
  EXPECT_THROW(LogUtility(0.0), DomainError);
}

TEST(UtilityTable, ExactKeying) {
  const Instance inst = testing::two_edge(4, 4, 2);
  std::map<std::pair<std::string, std::string>, double> a{
      {{"L1", "k0"}, 1}, {{"L2", "k0"}, 2}, {{"L1", "k1"}, 3}, {{"L2", "k1"}, 4}};
  const UtilityTable t(inst, a);
  EXPECT_EQ(t.at(1, 0).coefficient(), 3.0);
  EXPECT_EQ(t.coefficients(inst), a);

  auto missing = a;
  missing.erase({"L2", "k1"});
  EXPECT_THROW(UtilityTable(inst, missing), InputError);
  auto extra = a;
  extra[{"L3", "k0"}] = 1;
  EXPECT_THROW(UtilityTable(inst, extra), InputError);
  auto bad = a;
  bad[{"L1", "k0"}] = -1;
  EXPECT_THROW(UtilityTable(inst, bad), DomainError);
}

TEST(UtilityTable, PerPoolAndTotal) {
  const Instance inst = testing::two_edge(4, 4, 2);
  const UtilityTable t = UtilityTable::per_pool(inst, {2.0, 1.0});
  EXPECT_DOUBLE_EQ(total_utility(t, {{4.0, 1.0}, {9.0, 0.0}}), 2 * 2 + 2 * 1 + 3);
  EXPECT_THROW(UtilityTable::per_pool(inst, {1.0}), InputError);
}

}  // namespace
}  // namespace lineplan
