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

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "camofa/gan.hpp"
#include "camofa/numerics.hpp"
#include "camofa/pipeline/augment.hpp"
#include "camofa/pipeline/dataset.hpp"

namespace camofa {

/// Encoder-decoder with two stride-2 stages: 3x3 conv, two strided 4x4
/// convs, two 4x4 transposed convs, 3x3 conv to one logit per pixel.
template <class T>
struct SegmenterParams {
  Parameter<T> c1_w, c1_b, d1_w, d1_b, d2_w, d2_b, u1_w, u1_b, u2_w, u2_b, c3_w, c3_b;

  static SegmenterParams init(std::size_t channels, std::size_t width, Rng& rng) {
    SegmenterParams p;
    p.c1_w = init_uniform<T>("seg.c1.w", {width, channels, 3, 3}, channels * 9, rng);
    p.c1_b = Parameter<T>("seg.c1.b", Tensor<T>({width}));
    p.d1_w = init_uniform<T>("seg.d1.w", {2 * width, width, 4, 4}, width * 16, rng);
    p.d1_b = Parameter<T>("seg.d1.b", Tensor<T>({2 * width}));
    p.d2_w = init_uniform<T>("seg.d2.w", {2 * width, 2 * width, 4, 4}, 2 * width * 16, rng);
    p.d2_b = Parameter<T>("seg.d2.b", Tensor<T>({2 * width}));
    p.u1_w = init_uniform<T>("seg.u1.w", {2 * width, 2 * width, 4, 4}, 2 * width * 4, rng);
    p.u1_b = Parameter<T>("seg.u1.b", Tensor<T>({2 * width}));
    p.u2_w = init_uniform<T>("seg.u2.w", {2 * width, width, 4, 4}, 2 * width * 4, rng);
    p.u2_b = Parameter<T>("seg.u2.b", Tensor<T>({width}));
    p.c3_w = init_uniform<T>("seg.c3.w", {1, width, 3, 3}, width * 9, rng);
    p.c3_b = Parameter<T>("seg.c3.b", Tensor<T>({1}));
    return p;
  }

  std::vector<Parameter<T>*> parameters() {
    return {&c1_w, &c1_b, &d1_w, &d1_b, &d2_w, &d2_b, &u1_w, &u1_b, &u2_w, &u2_b, &c3_w, &c3_b};
  }
  std::vector<const Parameter<T>*> parameters() const {
    return {&c1_w, &c1_b, &d1_w, &d1_b, &d2_w, &d2_b, &u1_w, &u1_b, &u2_w, &u2_b, &c3_w, &c3_b};
  }
};

/// [C x H x W] -> logits [1 x H x W]. H and W must be multiples of 4. The
/// input is standardized over the whole image first.
template <class T>
Var<T> segmenter_forward(const Var<T>& image, const std::vector<Var<T>>& s) {
  auto relu_bias = [&](const Var<T>& x, std::size_t b) {
    return activation(add_channel_bias(x, s[b]), Activation::relu);
  };
  Var<T> h = standardize(image, T(1e-5));
  h = relu_bias(conv2d(h, s[0], 1, 1), 1);
  h = relu_bias(conv2d(h, s[2], 2, 1), 3);
  h = relu_bias(conv2d(h, s[4], 2, 1), 5);
  h = relu_bias(conv2d_transpose(h, s[6], 2, 1), 7);
  h = relu_bias(conv2d_transpose(h, s[8], 2, 1), 9);
  return add_channel_bias(conv2d(h, s[10], 1, 1), s[11]);
}

template <class T>
Tensor<T> mask_tensor(const Sample& s) {
  Tensor<T> m({1, s.image.height, s.image.width});
  for (std::size_t i = 0; i < s.mask.size(); ++i) m[i] = static_cast<T>(s.mask[i]);
  return m;
}

/// Per-pixel probabilities in [0, 1], H x W.
template <class T>
std::vector<double> predict(const SegmenterParams<T>& params, const Image& image) {
  Tape<T> tape;
  const auto s = freeze_all(tape, params);
  const auto probs = activation(segmenter_forward(tape.constant(to_chw<T>(image)), s), Activation::sigmoid);
  return {probs.value().data().begin(), probs.value().data().end()};
}

struct SegTrainConfig {
  std::size_t steps = 1000;
  std::size_t batch_size = 8;
  std::size_t width = 16;
  AdamConfig adam{1e-3, 0.9, 0.999, 1e-8};
  /// Optimizer for the augmentation parameters when they are trained jointly.
  AdamConfig augment_adam{};
  std::uint64_t seed = 0;
  /// Update generator and attention weights through the segmentation loss.
  bool train_augmentation = true;
};

template <class T>
struct SegmenterRun {
  SegmenterParams<T> params;
  std::vector<double> losses;  // mean batch loss per step
};

/// Trains the segmenter with per-pixel BCE. With `pipeline` non-null every
/// training image is first passed through the augmentation front end and,
/// when cfg.train_augmentation is set, the generator and attention weights
/// receive gradients through the hybrid swap. With `pipeline` null no
/// spectral code runs.
template <class T>
SegmenterRun<T> train_segmenter(const std::vector<Sample>& train, const SegTrainConfig& cfg,
                                AugmentPipeline<T>* pipeline = nullptr) {
  if (train.empty()) throw std::invalid_argument("train_segmenter: empty training set");
  Rng rng(cfg.seed);
  Rng init_rng = rng.fork(11);
  SegmenterRun<T> run{SegmenterParams<T>::init(train.front().image.channels, cfg.width, init_rng), {}};
  Adam<T> opt(cfg.adam, run.params.parameters());
  const bool joint = pipeline != nullptr && cfg.train_augmentation;
  std::vector<Parameter<T>*> aug_params;
  if (joint) aug_params = pipeline->parameters();
  Adam<T> aug_opt(cfg.augment_adam, aug_params);
  BatchSampler sampler(train.size(), rng.fork(12));
  Rng noise_rng = rng.fork(13);
  const T inv_batch = T{1} / static_cast<T>(cfg.batch_size);
  std::optional<FreqMask> mask;
  if (pipeline) {
    const auto& img = train.front().image;
    mask = make_mask(pipeline->beta, img.height, img.width);
  }

  for (std::size_t step = 1; step <= cfg.steps; ++step) {
    opt.zero_grads();
    aug_opt.zero_grads();
    double batch_loss = 0.0;
    for (std::size_t idx : sampler.next(cfg.batch_size)) {
      const Sample& sample = train[idx];
      Tape<T> tape;
      const auto s = watch_all(tape, run.params);
      Var<T> input;
      if (pipeline) {
        const auto noise = sample_noise<T>(sample.image.height, sample.image.width, noise_rng);
        const auto vars = joint ? AugmentVars<T>::watch(tape, *pipeline) : AugmentVars<T>::constant(tape, *pipeline);
        input = augment_var(tape, to_chw<T>(sample.image), noise, vars, pipeline->attention_config, *mask);
      } else {
        input = tape.constant(to_chw<T>(sample.image));
      }
      const Var<T> loss = reduce_loss(segmenter_forward(input, s), tape.constant(mask_tensor<T>(sample)),
                                      LossKind::bce_logits_mean);
      batch_loss += loss.value()[0];
      tape.backward(affine(loss, inv_batch, T{0}));
    }
    batch_loss /= static_cast<double>(cfg.batch_size);
    if (!std::isfinite(batch_loss)) {
      throw NumericalError("train_segmenter: non-finite loss at step " + std::to_string(step));
    }
    opt.step();
    if (joint) aug_opt.step();
    run.losses.push_back(batch_loss);
  }
  return run;
}

/// Mean absolute error and IoU at threshold 0.5.
struct Metrics {
  double mae = 0.0;
  double iou = 0.0;
};

/// MAE over all pixels of all samples; IoU averaged per sample (an empty
/// prediction on an empty mask counts as 1).
inline Metrics compute_metrics(const std::vector<std::vector<double>>& predictions,
                               const std::vector<std::vector<std::uint8_t>>& masks) {
  if (predictions.size() != masks.size() || predictions.empty()) {
    throw std::invalid_argument("compute_metrics: need matching, non-empty prediction and mask lists");
  }
  double abs_err = 0.0, iou_sum = 0.0;
  std::size_t pixels = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const auto& p = predictions[i];
    const auto& m = masks[i];
    if (p.size() != m.size()) throw DimensionError("compute_metrics: prediction/mask size mismatch");
    std::size_t inter = 0, uni = 0;
    for (std::size_t j = 0; j < p.size(); ++j) {
      abs_err += std::abs(p[j] - static_cast<double>(m[j]));
      const bool pos = p[j] >= 0.5;
      inter += pos && m[j];
      uni += pos || m[j];
    }
    pixels += p.size();
    iou_sum += uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
  }
  return {abs_err / static_cast<double>(pixels), iou_sum / static_cast<double>(predictions.size())};
}

template <class T>
Metrics evaluate(const SegmenterParams<T>& params, const std::vector<Sample>& test) {
  if (test.empty()) throw std::invalid_argument("evaluate: empty test set");
  std::vector<std::vector<double>> preds;
  std::vector<std::vector<std::uint8_t>> masks;
  for (const auto& s : test) {
    preds.push_back(predict(params, s.image));
    masks.push_back(s.mask);
  }
  return compute_metrics(preds, masks);
}

/// Passes every image through the frozen pipeline; masks are unchanged.
/// Noise is drawn per sample from (seed, position).
template <class T>
std::vector<Sample> augment_samples(const std::vector<Sample>& samples, const AugmentPipeline<T>& pipeline,
                                    double beta, std::uint64_t seed, const AugmentOptions& options = {}) {
  std::vector<Sample> out;
  out.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& img = samples[i].image;
    out.push_back({augment(img, pipeline, beta, inference_noise<T>(img.height, img.width, seed, i), options),
                   samples[i].mask});
  }
  return out;
}

}  // namespace camofa
