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

#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "camofa/numerics/rng.hpp"

namespace camofa {

/// Candidate swap fractions 0.01, 0.02, ..., 0.99.
struct BetaGrid {
  static constexpr std::size_t kSize = 99;
  static double at(std::size_t i) { return static_cast<double>(i + 1) / 100.0; }
  static std::vector<double> values() {
    std::vector<double> v(kSize);
    for (std::size_t i = 0; i < kSize; ++i) v[i] = at(i);
    return v;
  }
};

/// Score to maximize as a function of beta.
using Objective = std::function<double(double beta)>;

struct Evaluation {
  double beta = 0.0;
  double score = 0.0;
  std::size_t order = 0;
};

struct SearchResult {
  double beta_star = 0.0;
  double score_star = 0.0;
  std::vector<Evaluation> trace;
};

namespace detail {

inline double checked_eval(const Objective& f, double beta) {
  const double s = f(beta);
  if (!std::isfinite(s)) {
    throw std::domain_error("beta search: non-finite score at beta=" + std::to_string(beta));
  }
  return s;
}

/// Highest score; equal scores resolve to the smaller beta.
inline void pick_best(SearchResult& r) {
  const Evaluation* best = nullptr;
  for (const auto& e : r.trace) {
    if (!best || e.score > best->score || (e.score == best->score && e.beta < best->beta)) best = &e;
  }
  r.beta_star = best->beta;
  r.score_star = best->score;
}

}  // namespace detail

/// Exhaustive oracle: evaluates every grid point in increasing order.
inline SearchResult grid_search(const Objective& objective) {
  SearchResult r;
  for (std::size_t i = 0; i < BetaGrid::kSize; ++i) {
    const double beta = BetaGrid::at(i);
    r.trace.push_back({beta, detail::checked_eval(objective, beta), i});
  }
  detail::pick_best(r);
  return r;
}

/// Squared-exponential GP on beta with fixed hyperparameters. Scores are
/// standardized before fitting, so signal_sd is in standardized units.
struct GpConfig {
  double length_scale = 0.1;
  double signal_sd = 1.0;
  double noise_sd = 1e-3;
};

class GaussianProcess {
 public:
  explicit GaussianProcess(GpConfig cfg = {}) : cfg_(cfg) {}

  void fit(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size() || xs.empty()) throw std::invalid_argument("GaussianProcess::fit: bad sizes");
    xs_ = xs;
    const double n = static_cast<double>(ys.size());
    double mu = 0.0;
    for (double y : ys) mu += y;
    mu /= n;
    double var = 0.0;
    for (double y : ys) var += (y - mu) * (y - mu);
    var /= n;
    y_mean_ = mu;
    y_sd_ = var > 0.0 ? std::sqrt(var) : 1.0;

    const Eigen::Index m = static_cast<Eigen::Index>(xs.size());
    Eigen::MatrixXd k(m, m);
    Eigen::VectorXd y(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      y(i) = (ys[i] - y_mean_) / y_sd_;
      for (Eigen::Index j = 0; j < m; ++j) k(i, j) = kernel(xs[i], xs[j]);
    }
    // Points 0.01 apart are nearly collinear under l = 0.1; grow a jitter
    // on top of the noise variance until the factorization succeeds.
    double jitter = 0.0;
    for (int attempt = 0; attempt < 12; ++attempt) {
      Eigen::MatrixXd kn = k;
      kn.diagonal().array() += cfg_.noise_sd * cfg_.noise_sd + jitter;
      chol_.compute(kn);
      if (chol_.info() == Eigen::Success) break;
      jitter = jitter == 0.0 ? 1e-10 : jitter * 10.0;
    }
    alpha_ = chol_.solve(y);
  }

  /// Posterior mean and variance, standardized units.
  std::pair<double, double> predict_standardized(double x) const {
    const Eigen::Index m = static_cast<Eigen::Index>(xs_.size());
    Eigen::VectorXd ks(m);
    for (Eigen::Index i = 0; i < m; ++i) ks(i) = kernel(x, xs_[i]);
    const double mean = ks.dot(alpha_);
    const Eigen::VectorXd v = chol_.matrixL().solve(ks);
    const double var = std::max(0.0, kernel(x, x) - v.squaredNorm());
    return {mean, var};
  }

  /// Posterior mean in score units.
  double predict_mean(double x) const { return y_mean_ + y_sd_ * predict_standardized(x).first; }
  double score_scale() const noexcept { return y_sd_; }
  double standardize(double y) const noexcept { return (y - y_mean_) / y_sd_; }
  const GpConfig& config() const noexcept { return cfg_; }

 private:
  double kernel(double a, double b) const {
    const double d = (a - b) / cfg_.length_scale;
    return cfg_.signal_sd * cfg_.signal_sd * std::exp(-0.5 * d * d);
  }

  GpConfig cfg_;
  std::vector<double> xs_;
  double y_mean_ = 0.0, y_sd_ = 1.0;
  Eigen::LLT<Eigen::MatrixXd> chol_;
  Eigen::VectorXd alpha_;
};

/// Closed-form expected improvement over `best` for a maximization problem.
inline double expected_improvement(double mean, double variance, double best) {
  const double sd = std::sqrt(variance);
  const double gain = mean - best;
  if (sd < 1e-12) return std::max(gain, 0.0);
  const double z = gain / sd;
  const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  return std::max(0.0, gain * cdf + sd * pdf);
}

/// Bayesian optimization over the grid. Starts from beta = 0.25, 0.50,
/// 0.75, then repeatedly evaluates the unevaluated grid point with the
/// largest expected improvement. Exact EI ties are broken with the seeded
/// generator. Returns the best observed point.
inline SearchResult bo_search(const Objective& objective, std::size_t budget, std::uint64_t seed,
                              GpConfig gp_cfg = {}) {
  if (budget < 3) throw std::invalid_argument("bo_search: budget must be >= 3, got " + std::to_string(budget));
  budget = std::min(budget, BetaGrid::kSize);
  Rng rng(seed);
  std::vector<bool> evaluated(BetaGrid::kSize, false);
  SearchResult r;
  std::vector<double> xs, ys;
  auto evaluate = [&](std::size_t idx) {
    const double beta = BetaGrid::at(idx);
    const double score = detail::checked_eval(objective, beta);
    evaluated[idx] = true;
    r.trace.push_back({beta, score, r.trace.size()});
    xs.push_back(beta);
    ys.push_back(score);
  };
  for (std::size_t idx : {24u, 49u, 74u}) evaluate(idx);

  GaussianProcess gp(gp_cfg);
  while (r.trace.size() < budget) {
    gp.fit(xs, ys);
    double best = -INFINITY;
    for (double y : ys) best = std::max(best, gp.standardize(y));
    double top = -1.0;
    std::vector<std::size_t> ties;
    for (std::size_t i = 0; i < BetaGrid::kSize; ++i) {
      if (evaluated[i]) continue;
      const auto [mean, var] = gp.predict_standardized(BetaGrid::at(i));
      const double ei = expected_improvement(mean, var, best);
      if (ei > top) {
        top = ei;
        ties.assign(1, i);
      } else if (ei == top) {
        ties.push_back(i);
      }
    }
    evaluate(ties.size() == 1 ? ties.front() : ties[rng.below(ties.size())]);
  }
  detail::pick_best(r);
  return r;
}

}  // namespace camofa
