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

#include <cstddef>
#include <cstdint>
#include <vector>

#include "camofa/attention.hpp"
#include "camofa/gan.hpp"
#include "camofa/spectral.hpp"

namespace camofa {

/// Learned augmentation front end: generator, cross-attention reference
/// stack, and the hybrid-swap fraction beta.
template <class T>
struct AugmentPipeline {
  GeneratorParams<T> generator;
  AttentionParams<T> attention;
  AttentionConfig attention_config;
  double beta = 0.1;

  static AugmentPipeline init(const GanArch& arch, const AttentionConfig& attn, double beta, Rng& rng) {
    return {GeneratorParams<T>::init(arch, rng), AttentionParams<T>::init(arch.channels, attn, rng), attn, beta};
  }

  std::vector<Parameter<T>*> parameters() {
    auto out = generator.parameters();
    for (auto* p : attention.parameters()) out.push_back(p);
    return out;
  }
};

/// Tape handles for an AugmentPipeline.
template <class T>
struct AugmentVars {
  std::vector<Var<T>> generator;
  AttentionVars<T> attention;

  static AugmentVars watch(Tape<T>& tape, AugmentPipeline<T>& p) {
    return {watch_all(tape, p.generator), AttentionVars<T>::watch(tape, p.attention)};
  }
  static AugmentVars constant(Tape<T>& tape, const AugmentPipeline<T>& p) {
    return {freeze_all(tape, p.generator), AttentionVars<T>::constant(tape, p.attention)};
  }
};

struct AugmentOptions {
  ClampGrad clamp_grad = ClampGrad::straight_through;
  bool clamp = true;
  /// Replace the attention output with the input itself (I_R = I).
  bool reference_is_input = false;
};

/// I_G = G(I, z); I_R = reference(I, I_G); I* = hybrid_swap(I, I_R, beta).
/// `input` is a [C x H x W] tensor; the result is clamped unless
/// options.clamp is false.
template <class T>
Var<T> augment_var(Tape<T>& tape, const Tensor<T>& input, const Tensor<T>& noise,
                   const AugmentVars<T>& vars, const AttentionConfig& attn_cfg, const FreqMask& mask,
                   const AugmentOptions& options = {}) {
  const Var<T> image = tape.constant(input);
  Var<T> reference = image;
  if (!options.reference_is_input) {
    const Var<T> generated = generator_forward(image, tape.constant(noise), vars.generator);
    reference = make_reference_var(image, generated, vars.attention, attn_cfg);
  }
  const Var<T> swapped = hybrid_swap_var(reference, input, mask);
  return options.clamp ? clamp01(swapped, options.clamp_grad) : swapped;
}

/// Per-image noise stream for inference; depends only on (seed, index).
template <class T>
Tensor<T> inference_noise(std::size_t height, std::size_t width, std::uint64_t seed, std::size_t index) {
  Rng rng(seed ^ (0xA5A5A5A5ULL + 0x9E3779B97F4A7C15ULL * (index + 1)));
  return sample_noise<T>(height, width, rng);
}

template <class T>
Image augment(const Image& input, const AugmentPipeline<T>& pipeline, double beta,
              const Tensor<T>& noise, const AugmentOptions& options = {}) {
  Tape<T> tape;
  const auto vars = AugmentVars<T>::constant(tape, pipeline);
  const auto mask = make_mask(beta, input.height, input.width);
  return from_chw(augment_var(tape, to_chw<T>(input), noise, vars, pipeline.attention_config, mask, options).value());
}

/// The reference image I_R the pipeline would swap against.
template <class T>
Image reference_image(const Image& input, const AugmentPipeline<T>& pipeline, const Tensor<T>& noise) {
  return make_reference(input, generate(input, noise, pipeline.generator), pipeline.attention,
                        pipeline.attention_config);
}

}  // namespace camofa
