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
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "camofa/numerics.hpp"
#include "camofa/spectral/image.hpp"

namespace camofa {

/// Widths of the skip-less encoder/decoder generator and the patch
/// discriminator. Every level halves (encoder) or doubles (decoder) the
/// spatial size with 4x4 kernels, stride 2, pad 1.
struct GanArch {
  std::size_t channels = 3;
  std::size_t base_width = 16;
};

/// Encoder e1..e3 (conv), decoder d1..d3 (transposed conv), no skip
/// connections. The first encoder layer sees C image channels plus one
/// noise channel; its noise-channel slice is the noise-injection weight.
template <class T>
struct GeneratorParams {
  Parameter<T> e1_w, e1_b, e2_w, e2_b, e3_w, e3_b;
  Parameter<T> d1_w, d1_b, d2_w, d2_b, d3_w, d3_b;

  static GeneratorParams init(const GanArch& arch, Rng& rng) {
    const std::size_t c = arch.channels, w = arch.base_width;
    auto conv = [&](const char* name, std::size_t out, std::size_t in) {
      return init_uniform<T>(name, {out, in, 4, 4}, in * 16, rng);
    };
    // Transposed weights are [in x out x k x k]; with stride 2 each output
    // sees a quarter of the taps.
    auto deconv = [&](const char* name, std::size_t in, std::size_t out) {
      return init_uniform<T>(name, {in, out, 4, 4}, in * 4, rng);
    };
    auto bias = [](const char* name, std::size_t n) { return Parameter<T>(name, Tensor<T>({n})); };
    GeneratorParams p;
    p.e1_w = conv("gen.e1.w", w, c + 1);
    p.e1_b = bias("gen.e1.b", w);
    p.e2_w = conv("gen.e2.w", 2 * w, w);
    p.e2_b = bias("gen.e2.b", 2 * w);
    p.e3_w = conv("gen.e3.w", 4 * w, 2 * w);
    p.e3_b = bias("gen.e3.b", 4 * w);
    p.d1_w = deconv("gen.d1.w", 4 * w, 2 * w);
    p.d1_b = bias("gen.d1.b", 2 * w);
    p.d2_w = deconv("gen.d2.w", 2 * w, w);
    p.d2_b = bias("gen.d2.b", w);
    p.d3_w = deconv("gen.d3.w", w, c);
    p.d3_b = bias("gen.d3.b", c);
    return p;
  }

  std::vector<Parameter<T>*> parameters() {
    return {&e1_w, &e1_b, &e2_w, &e2_b, &e3_w, &e3_b, &d1_w, &d1_b, &d2_w, &d2_b, &d3_w, &d3_b};
  }
  std::vector<const Parameter<T>*> parameters() const {
    return {&e1_w, &e1_b, &e2_w, &e2_b, &e3_w, &e3_b, &d1_w, &d1_b, &d2_w, &d2_b, &d3_w, &d3_b};
  }
};

/// Three-layer patch discriminator over the channel-concatenated
/// (condition, candidate) pair. Receptive field of one logit: 22 px.
template <class T>
struct DiscriminatorParams {
  Parameter<T> c1_w, c1_b, c2_w, c2_b, c3_w, c3_b;

  static DiscriminatorParams init(const GanArch& arch, Rng& rng) {
    const std::size_t c = arch.channels, w = arch.base_width;
    DiscriminatorParams p;
    p.c1_w = init_uniform<T>("disc.c1.w", {w, 2 * c, 4, 4}, 2 * c * 16, rng);
    p.c1_b = Parameter<T>("disc.c1.b", Tensor<T>({w}));
    p.c2_w = init_uniform<T>("disc.c2.w", {2 * w, w, 4, 4}, w * 16, rng);
    p.c2_b = Parameter<T>("disc.c2.b", Tensor<T>({2 * w}));
    p.c3_w = init_uniform<T>("disc.c3.w", {1, 2 * w, 4, 4}, 2 * w * 16, rng);
    p.c3_b = Parameter<T>("disc.c3.b", Tensor<T>({1}));
    return p;
  }

  std::vector<Parameter<T>*> parameters() { return {&c1_w, &c1_b, &c2_w, &c2_b, &c3_w, &c3_b}; }
  std::vector<const Parameter<T>*> parameters() const {
    return {&c1_w, &c1_b, &c2_w, &c2_b, &c3_w, &c3_b};
  }
};

/// Puts every parameter on the tape as a watched leaf.
template <class T, class Params>
std::vector<Var<T>> watch_all(Tape<T>& tape, Params& params) {
  std::vector<Var<T>> vars;
  for (auto* p : params.parameters()) vars.push_back(tape.watch(*p));
  return vars;
}

/// Puts every parameter on the tape as a frozen constant.
template <class T, class Params>
std::vector<Var<T>> freeze_all(Tape<T>& tape, const Params& params) {
  std::vector<Var<T>> vars;
  for (const auto* p : params.parameters()) vars.push_back(tape.constant(p->value));
  return vars;
}

/// One i.i.d. standard-normal channel at image resolution.
template <class T>
Tensor<T> sample_noise(std::size_t height, std::size_t width, Rng& rng) {
  Tensor<T> z({1, height, width});
  for (auto& v : z.data()) v = static_cast<T>(rng.normal());
  return z;
}

namespace detail {

template <class T>
Var<T> conv_block(const Var<T>& x, const Var<T>& w, const Var<T>& b, std::size_t stride,
                  std::size_t pad) {
  return add_channel_bias(conv2d(x, w, stride, pad), b);
}

template <class T>
Var<T> deconv_block(const Var<T>& x, const Var<T>& w, const Var<T>& b) {
  return add_channel_bias(conv2d_transpose(x, w, 2, 1), b);
}

}  // namespace detail

/// G(I, z): image [C x H x W] in [0, 1] plus noise [1 x H x W] -> image
/// [C x H x W] in [0, 1]. H and W must be multiples of 8.
template <class T>
Var<T> generator_forward(const Var<T>& image, const Var<T>& noise, const std::vector<Var<T>>& g) {
  const auto& s = image.shape();
  if (s.size() != 3 || s[1] % 8 != 0 || s[2] % 8 != 0) {
    throw DimensionError("generator: image " + shape_string(s) + " must be C x H x W with H, W multiples of 8");
  }
  if (noise.shape() != Shape{1, s[1], s[2]}) {
    throw DimensionError("generator: noise " + shape_string(noise.shape()) + " does not match image " + shape_string(s));
  }
  if (g.at(0).shape()[1] != s[0] + 1) {
    throw DimensionError("generator: parameters expect " + std::to_string(g[0].shape()[1] - 1) +
                         " image channels, got " + std::to_string(s[0]));
  }
  Var<T> h = concat0(image, noise);
  h = activation(detail::conv_block(h, g[0], g[1], 2, 1), Activation::leaky_relu);
  h = activation(detail::conv_block(h, g[2], g[3], 2, 1), Activation::leaky_relu);
  h = activation(detail::conv_block(h, g[4], g[5], 2, 1), Activation::leaky_relu);
  h = activation(detail::deconv_block(h, g[6], g[7]), Activation::relu);
  h = activation(detail::deconv_block(h, g[8], g[9]), Activation::relu);
  h = activation(detail::deconv_block(h, g[10], g[11]), Activation::tanh);
  return affine(h, T{0.5}, T{0.5});
}

/// D(condition, candidate) -> logit grid [1 x h x w], one logit per patch.
template <class T>
Var<T> discriminator_forward(const Var<T>& condition, const Var<T>& candidate,
                             const std::vector<Var<T>>& d) {
  if (condition.shape() != candidate.shape()) {
    throw DimensionError("discriminator: condition " + shape_string(condition.shape()) +
                         " vs candidate " + shape_string(candidate.shape()));
  }
  Var<T> h = concat0(condition, candidate);
  h = activation(detail::conv_block(h, d[0], d[1], 2, 1), Activation::leaky_relu);
  h = activation(detail::conv_block(h, d[2], d[3], 2, 1), Activation::leaky_relu);
  return detail::conv_block(h, d[4], d[5], 1, 1);
}

template <class T>
Var<T> constant_like(const Var<T>& like, T fill) {
  return like.tape()->constant(Tensor<T>(like.shape(), fill));
}

/// Mean over patches of bce(real -> 1) + bce(fake -> 0).
template <class T>
Var<T> loss_d(const Var<T>& real_logits, const Var<T>& fake_logits) {
  real_logits.value().require_same_shape(fake_logits.value(), "loss_d");
  return add(reduce_loss(real_logits, constant_like(real_logits, T{1}), LossKind::bce_logits_mean),
             reduce_loss(fake_logits, constant_like(fake_logits, T{0}), LossKind::bce_logits_mean));
}

template <class T>
struct GeneratorLoss {
  Var<T> total;
  Var<T> adversarial;
  Var<T> l1;
};

/// Non-saturating adversarial term bce(fake -> 1) plus lambda * mean|I - G|.
template <class T>
GeneratorLoss<T> loss_g(const Var<T>& fake_logits, const Var<T>& generated, const Var<T>& input,
                        T lambda_l1) {
  const Var<T> adv = reduce_loss(fake_logits, constant_like(fake_logits, T{1}), LossKind::bce_logits_mean);
  const Var<T> l1 = reduce_loss(generated, input, LossKind::l1_mean);
  return {add(adv, affine(l1, lambda_l1, T{0})), adv, l1};
}

/// Image-level generator call with frozen parameters.
template <class T>
Image generate(const Image& input, const Tensor<T>& noise, const GeneratorParams<T>& params) {
  Tape<T> tape;
  auto g = freeze_all(tape, params);
  return from_chw(generator_forward(tape.constant(to_chw<T>(input)), tape.constant(noise), g).value());
}

struct TrainConfig {
  double lambda_l1 = 100.0;
  AdamConfig adam{};  // lr 1e-4, beta1 0.5, beta2 0.999
  std::size_t batch_size = 8;
  std::size_t steps = 200;
  std::uint64_t seed = 0;
  GanArch arch{};
};

struct LossReport {
  std::size_t step = 0;
  double d_loss = 0.0;
  double g_adv_loss = 0.0;
  double g_l1_loss = 0.0;
  double g_total = 0.0;
};

template <class T>
struct TrainedGan {
  GeneratorParams<T> generator;
  DiscriminatorParams<T> discriminator;
  std::vector<LossReport> reports;
};

/// Deterministic minibatch order: a fresh seeded shuffle every epoch.
class BatchSampler {
 public:
  BatchSampler(std::size_t count, Rng rng) : order_(count), rng_(rng) { reshuffle(); }

  std::vector<std::size_t> next(std::size_t batch) {
    std::vector<std::size_t> out;
    while (out.size() < batch) {
      if (cursor_ == order_.size()) reshuffle();
      out.push_back(order_[cursor_++]);
    }
    return out;
  }

 private:
  void reshuffle() {
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    for (std::size_t i = order_.size(); i > 1; --i) std::swap(order_[i - 1], order_[rng_.below(i)]);
    cursor_ = 0;
  }

  std::vector<std::size_t> order_;
  Rng rng_;
  std::size_t cursor_ = 0;
};

/// Alternating optimization: per step one discriminator update on the batch
/// (real pair (I, I), fake pair (I, G(I, z))), then one generator update
/// reusing the same noise draws. Per-sample losses are scaled by 1/batch so
/// accumulated gradients equal those of the batch mean.
template <class T>
TrainedGan<T> train_gan(const std::vector<Image>& dataset, const TrainConfig& cfg,
                        const std::function<void(const LossReport&)>& on_report = {}) {
  if (dataset.empty()) throw std::invalid_argument("train_gan: empty dataset");
  if (cfg.batch_size < 1) throw std::invalid_argument("train_gan: batch_size must be >= 1");
  if (cfg.lambda_l1 < 0) throw std::invalid_argument("train_gan: lambda_l1 must be >= 0");
  Rng rng(cfg.seed);
  Rng init_rng = rng.fork(1);
  GanArch arch = cfg.arch;
  arch.channels = dataset.front().channels;
  TrainedGan<T> out{GeneratorParams<T>::init(arch, init_rng), DiscriminatorParams<T>::init(arch, init_rng), {}};
  Adam<T> opt_g(cfg.adam, out.generator.parameters());
  Adam<T> opt_d(cfg.adam, out.discriminator.parameters());
  BatchSampler sampler(dataset.size(), rng.fork(2));
  Rng noise_rng = rng.fork(3);
  const T inv_batch = T{1} / static_cast<T>(cfg.batch_size);
  const T lambda = static_cast<T>(cfg.lambda_l1);

  for (std::size_t step = 1; step <= cfg.steps; ++step) {
    const auto batch = sampler.next(cfg.batch_size);
    std::vector<Tensor<T>> inputs, noises, fakes;
    for (std::size_t idx : batch) {
      inputs.push_back(to_chw<T>(dataset[idx]));
      noises.push_back(sample_noise<T>(dataset[idx].height, dataset[idx].width, noise_rng));
    }

    LossReport report;
    report.step = step;
    opt_d.zero_grads();
    for (std::size_t i = 0; i < batch.size(); ++i) {
      Tape<T> tape;
      auto g = freeze_all(tape, out.generator);
      auto d = watch_all(tape, out.discriminator);
      const Var<T> image = tape.constant(inputs[i]);
      const Var<T> fake = generator_forward(image, tape.constant(noises[i]), g);
      const Var<T> ld = loss_d(discriminator_forward(image, image, d), discriminator_forward(image, fake, d));
      report.d_loss += ld.value()[0];
      tape.backward(affine(ld, inv_batch, T{0}));
    }
    opt_d.step();

    opt_g.zero_grads();
    for (std::size_t i = 0; i < batch.size(); ++i) {
      Tape<T> tape;
      auto g = watch_all(tape, out.generator);
      auto d = freeze_all(tape, out.discriminator);
      const Var<T> image = tape.constant(inputs[i]);
      const Var<T> fake = generator_forward(image, tape.constant(noises[i]), g);
      const auto lg = loss_g(discriminator_forward(image, fake, d), fake, image, lambda);
      report.g_adv_loss += lg.adversarial.value()[0];
      report.g_l1_loss += lg.l1.value()[0];
      report.g_total += lg.total.value()[0];
      tape.backward(affine(lg.total, inv_batch, T{0}));
    }
    opt_g.step();

    const double n = static_cast<double>(batch.size());
    report.d_loss /= n;
    report.g_adv_loss /= n;
    report.g_l1_loss /= n;
    report.g_total /= n;
    if (!std::isfinite(report.d_loss) || !std::isfinite(report.g_total)) {
      throw NumericalError("train_gan: non-finite loss at step " + std::to_string(step));
    }
    out.reports.push_back(report);
    if (on_report) on_report(report);
  }
  return out;
}

}  // namespace camofa
