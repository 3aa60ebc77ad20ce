// Copyright 2026 The CamoFA Authors. All Rights Reserved.
//
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
#include <numbers>
#include <set>
#include <stdexcept>
#include <vector>

#include "camofa/betasearch.hpp"
#include "camofa/numerics/rng.hpp"

namespace camofa {
namespace {

// Unimodal test objective whose peak and width depend on the seed.
struct Bump {
  double center, width;
  explicit Bump(std::uint64_t seed) {
    Rng rng(seed);
    center = rng.uniform(0.05, 0.95);
    width = rng.uniform(0.1, 0.3);
  }
  double operator()(double beta) const {
    const double d = (beta - center) / width;
    return std::exp(-0.5 * d * d);
  }
};

bool on_grid(double beta) {
  for (double g : BetaGrid::values())
    if (g == beta) return true;
  return false;
}

TEST(BetaGrid, NinetyNineIncreasingValues) {
  const auto v = BetaGrid::values();
  ASSERT_EQ(v.size(), 99u);
  EXPECT_EQ(v.front(), 0.01);
  EXPECT_EQ(v.back(), 0.99);
  for (std::size_t i = 1; i < v.size(); ++i) EXPECT_GT(v[i], v[i - 1]);
}

TEST(GridSearch, FindsQuadraticPeak) {
  const auto r = grid_search([](double b) { return -(b - 0.37) * (b - 0.37); });
  EXPECT_EQ(r.beta_star, 0.37);
  EXPECT_EQ(r.trace.size(), 99u);
  for (std::size_t i = 0; i < r.trace.size(); ++i) EXPECT_EQ(r.trace[i].order, i);
}

TEST(GridSearch, TiesGoToSmallerBeta) {
  EXPECT_EQ(grid_search([](double) { return 3.0; }).beta_star, 0.01);
  // two equal peaks
  EXPECT_EQ(grid_search([](double b) { return std::abs(b - 0.2) < 1e-9 || std::abs(b - 0.8) < 1e-9 ? 1.0 : 0.0; }).beta_star,
            0.2);
}

TEST(GridSearch, NonFiniteScoreNamesBeta) {
  try {
    grid_search([](double b) { return b > 0.5 ? NAN : 0.0; });
    FAIL() << "expected domain_error";
  } catch (const std::domain_error& e) {
    EXPECT_NE(std::string(e.what()).find("0.51"), std::string::npos) << e.what();
  }
}

TEST(BoSearch, RejectsTinyBudget) {
  EXPECT_THROW(bo_search([](double) { return 0.0; }, 2, 0), std::invalid_argument);
}

TEST(BoSearch, StartsAtQuartersAndStaysOnGrid) {
  const Bump f(3);
  const auto r = bo_search(f, 15, 0);
  ASSERT_EQ(r.trace.size(), 15u);
  EXPECT_EQ(r.trace[0].beta, 0.25);
  EXPECT_EQ(r.trace[1].beta, 0.50);
  EXPECT_EQ(r.trace[2].beta, 0.75);
  std::set<double> seen;
  for (const auto& e : r.trace) {
    EXPECT_TRUE(on_grid(e.beta)) << e.beta;
    EXPECT_TRUE(seen.insert(e.beta).second) << "re-evaluated " << e.beta;
  }
}

TEST(BoSearch, LandsNearGridArgmaxOnUnimodalObjectives) {
  int hits = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Bump f(seed);
    const double oracle = grid_search(f).beta_star;
    const auto r = bo_search(f, 20, seed);
    hits += std::abs(r.beta_star - oracle) <= 0.05 + 1e-12;
    EXPECT_LE(r.score_star, grid_search(f).score_star);
  }
  EXPECT_GE(hits, 9);
}

TEST(BoSearch, FullBudgetMatchesGridExactly) {
  for (std::uint64_t seed : {0u, 5u}) {
    const Bump f(seed);
    const auto bo = bo_search(f, 99, seed);
    const auto grid = grid_search(f);
    EXPECT_EQ(bo.trace.size(), 99u);
    EXPECT_EQ(bo.score_star, grid.score_star);
    EXPECT_EQ(bo.beta_star, grid.beta_star);
  }
  // Budgets past the grid size are capped.
  EXPECT_EQ(bo_search(Bump(1), 500, 0).trace.size(), 99u);
}

TEST(BoSearch, DeterministicUnderSeed) {
  const Bump f(4);
  const auto a = bo_search(f, 25, 11), b = bo_search(f, 25, 11);
  ASSERT_EQ(a.trace.size(), b.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) EXPECT_EQ(a.trace[i].beta, b.trace[i].beta);
}

TEST(BoSearch, FlatObjectiveTiesResolveToSmallestBeta) {
  const auto r = bo_search([](double) { return 1.0; }, 10, 3);
  double smallest = 1.0;
  for (const auto& e : r.trace) smallest = std::min(smallest, e.beta);
  EXPECT_EQ(r.beta_star, smallest);
}

TEST(GaussianProcess, InterpolatesObservations) {
  const Bump f(6);
  std::vector<double> xs = {0.1, 0.25, 0.4, 0.62, 0.9}, ys;
  for (double x : xs) ys.push_back(f(x));
  GaussianProcess gp;
  gp.fit(xs, ys);
  for (std::size_t i = 0; i < xs.size(); ++i)
    EXPECT_NEAR(gp.predict_mean(xs[i]), ys[i], 3 * gp.config().noise_sd * gp.score_scale());
}

TEST(GaussianProcess, VarianceSmallestAtObservations) {
  GaussianProcess gp;
  gp.fit({0.3, 0.7}, {1.0, 2.0});
  const double at_obs = gp.predict_standardized(0.3).second;
  EXPECT_LT(at_obs, 1e-5);
  EXPECT_LT(at_obs, gp.predict_standardized(0.5).second);
  EXPECT_LT(gp.predict_standardized(0.5).second, gp.predict_standardized(0.05).second);
}

TEST(ExpectedImprovement, MatchesNumericalIntegral) {
  // EI = E[max(Y - best, 0)], Y ~ N(mean, var), by trapezoid on a wide grid.
  for (auto [mean, var, best] : std::vector<std::tuple<double, double, double>>{
           {0.0, 1.0, 0.0}, {0.5, 0.04, 1.0}, {-1.0, 2.0, 0.3}, {2.0, 0.5, 0.0}}) {
    const double sd = std::sqrt(var);
    double integral = 0;
    const int n = 200000;
    const double lo = mean - 12 * sd, hi = mean + 12 * sd, h = (hi - lo) / n;
    for (int i = 0; i <= n; ++i) {
      const double y = lo + i * h;
      const double w = (i == 0 || i == n) ? 0.5 : 1.0;
      const double pdf = std::exp(-0.5 * (y - mean) * (y - mean) / var) / (sd * std::sqrt(2 * std::numbers::pi));
      integral += w * std::max(y - best, 0.0) * pdf * h;
    }
    EXPECT_NEAR(expected_improvement(mean, var, best), integral, 1e-7);
  }
  EXPECT_EQ(expected_improvement(0.2, 0.0, 0.5), 0.0);
  EXPECT_EQ(expected_improvement(0.7, 0.0, 0.5), 0.7 - 0.5);
}

}  // namespace
}  // namespace camofa
