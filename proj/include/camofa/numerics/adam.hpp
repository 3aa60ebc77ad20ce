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

#include <cmath>
#include <cstddef>
#include <vector>

#include "camofa/numerics/rng.hpp"
#include "camofa/numerics/tensor.hpp"

namespace camofa {

/// Adam hyperparameters. Defaults are the GAN training setup:
/// lr 1e-4, beta1 0.5, beta2 0.999.
struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected Adam over a fixed parameter set. Gradients are read but
/// never cleared; callers zero them between steps.
template <class T>
class Adam {
 public:
  Adam(AdamConfig config, std::vector<Parameter<T>*> params)
      : config_(config), params_(std::move(params)) {
    for (auto* p : params_) {
      m_.push_back(Tensor<T>::zeros_like(p->value));
      v_.push_back(Tensor<T>::zeros_like(p->value));
    }
  }

  void step() {
    ++t_;
    const double b1 = config_.beta1, b2 = config_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
      auto& value = params_[i]->value;
      const auto& grad = params_[i]->grad;
      auto& m = m_[i];
      auto& v = v_[i];
      for (std::size_t j = 0; j < value.size(); ++j) {
        const double g = grad[j];
        const double mj = b1 * m[j] + (1.0 - b1) * g;
        const double vj = b2 * v[j] + (1.0 - b2) * g * g;
        m[j] = static_cast<T>(mj);
        v[j] = static_cast<T>(vj);
        const double update = config_.lr * (mj / c1) / (std::sqrt(vj / c2) + config_.eps);
        value[j] = static_cast<T>(value[j] - update);
      }
    }
  }

  void zero_grads() {
    for (auto* p : params_) p->zero_grad();
  }

  std::size_t steps() const noexcept { return t_; }
  const AdamConfig& config() const noexcept { return config_; }
  const Tensor<T>& first_moment(std::size_t i) const { return m_.at(i); }
  const Tensor<T>& second_moment(std::size_t i) const { return v_.at(i); }
  const std::vector<Parameter<T>*>& parameters() const noexcept { return params_; }

 private:
  AdamConfig config_;
  std::vector<Parameter<T>*> params_;
  std::vector<Tensor<T>> m_, v_;
  std::size_t t_ = 0;
};

/// Uniform in +-1/sqrt(fan_in).
template <class T>
Parameter<T> init_uniform(std::string name, Shape shape, std::size_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  Tensor<T> value(std::move(shape));
  for (auto& v : value.data()) v = static_cast<T>(rng.uniform(-bound, bound));
  return Parameter<T>(std::move(name), std::move(value));
}

}  // namespace camofa
