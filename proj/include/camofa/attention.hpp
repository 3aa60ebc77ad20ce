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
#include <stdexcept>
#include <string>
#include <vector>

#include "camofa/numerics.hpp"
#include "camofa/spectral/image.hpp"

// Cross-attention reference image: both images are cut into P x P patches,
// embedded with one shared matrix, and the input's tokens attend over the
// generated image's tokens. The attended tokens are projected back to
// pixels and standardized into [0, 1].

namespace camofa {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct AttentionConfig {
  std::size_t patch_size = 8;
  std::size_t token_dim = 64;
  double eps = 1e-5;  // variance floor of the output standardization

  void validate(std::size_t height, std::size_t width) const {
    if (patch_size < 1 || token_dim < 1) throw ConfigError("attention: patch_size and token_dim must be >= 1");
    if (height % patch_size != 0 || width % patch_size != 0) {
      throw ConfigError("attention: patch size " + std::to_string(patch_size) +
                        " does not divide image " + std::to_string(height) + "x" +
                        std::to_string(width));
    }
  }
};

/// Embedding W_e [P*P*C x D], query/key/value [D x D], output W_d [D x P*P*C].
template <class T>
struct AttentionParams {
  Parameter<T> embed, query, key, value, out;

  static AttentionParams init(std::size_t channels, const AttentionConfig& cfg, Rng& rng) {
    const std::size_t patch_dim = cfg.patch_size * cfg.patch_size * channels;
    const std::size_t d = cfg.token_dim;
    return {init_uniform<T>("attn.embed", {patch_dim, d}, patch_dim, rng),
            init_uniform<T>("attn.query", {d, d}, d, rng),
            init_uniform<T>("attn.key", {d, d}, d, rng),
            init_uniform<T>("attn.value", {d, d}, d, rng),
            init_uniform<T>("attn.out", {d, patch_dim}, d, rng)};
  }

  std::vector<Parameter<T>*> parameters() { return {&embed, &query, &key, &value, &out}; }
};

/// Tape handles for the five projections, watched or frozen.
template <class T>
struct AttentionVars {
  Var<T> embed, query, key, value, out;

  static AttentionVars watch(Tape<T>& tape, AttentionParams<T>& p) {
    return {tape.watch(p.embed), tape.watch(p.query), tape.watch(p.key), tape.watch(p.value),
            tape.watch(p.out)};
  }
  static AttentionVars constant(Tape<T>& tape, const AttentionParams<T>& p) {
    return {tape.constant(p.embed.value), tape.constant(p.query.value),
            tape.constant(p.key.value), tape.constant(p.value.value), tape.constant(p.out.value)};
  }
};

/// For a [C x H x W] tensor: source index of every entry of the [N x P*P*C]
/// patch matrix. Patches run in row-major order; inside a patch the layout
/// is (row, column, channel) with channel fastest.
inline std::vector<std::size_t> patch_index(std::size_t channels, std::size_t height,
                                            std::size_t width, std::size_t patch) {
  if (patch == 0 || height % patch != 0 || width % patch != 0) {
    throw ConfigError("patchify: patch size " + std::to_string(patch) + " does not divide " +
                      std::to_string(height) + "x" + std::to_string(width));
  }
  const std::size_t gh = height / patch, gw = width / patch;
  std::vector<std::size_t> index;
  index.reserve(channels * height * width);
  for (std::size_t by = 0; by < gh; ++by)
    for (std::size_t bx = 0; bx < gw; ++bx)
      for (std::size_t py = 0; py < patch; ++py)
        for (std::size_t px = 0; px < patch; ++px)
          for (std::size_t c = 0; c < channels; ++c)
            index.push_back((c * height + by * patch + py) * width + bx * patch + px);
  return index;
}

/// [C x H x W] -> [N x P*P*C].
template <class T>
Var<T> patchify(const Var<T>& chw, std::size_t patch) {
  const auto& s = chw.shape();
  if (s.size() != 3) throw DimensionError("patchify: expected [C x H x W], got " + shape_string(s));
  auto index = patch_index(s[0], s[1], s[2], patch);
  const std::size_t n = (s[1] / patch) * (s[2] / patch);
  return gather(chw, std::move(index), Shape{n, patch * patch * s[0]});
}

/// [N x P*P*C] -> [C x H x W]; exact inverse of patchify.
template <class T>
Var<T> unpatchify(const Var<T>& patches, std::size_t channels, std::size_t height,
                  std::size_t width, std::size_t patch) {
  const auto forward = patch_index(channels, height, width, patch);
  if (patches.value().size() != forward.size()) {
    throw DimensionError("unpatchify: " + shape_string(patches.shape()) + " does not hold a " +
                         std::to_string(channels) + "x" + std::to_string(height) + "x" +
                         std::to_string(width) + " image");
  }
  std::vector<std::size_t> inverse(forward.size());
  for (std::size_t i = 0; i < forward.size(); ++i) inverse[forward[i]] = i;
  return gather(patches, std::move(inverse), Shape{channels, height, width});
}

/// Image-level patchify: row n is the flattened n-th P x P x C block.
template <class T>
Tensor<T> patchify(const Image& img, std::size_t patch) {
  Tape<T> tape;
  return patchify(tape.constant(to_chw<T>(img)), patch).value();
}

template <class T>
Image unpatchify(const Tensor<T>& patches, std::size_t channels, std::size_t height,
                 std::size_t width, std::size_t patch) {
  Tape<T> tape;
  return from_chw(unpatchify(tape.constant(patches), channels, height, width, patch).value());
}

/// tokens = patches x W_e
template <class T>
Var<T> embed(const Var<T>& patches, const Var<T>& embedding) {
  return matmul(patches, embedding);
}

template <class T>
struct CrossAttention {
  Var<T> attention;  // [N x N], row-stochastic
  Var<T> output;     // [N x D]
};

/// A = softmax((X W_q)(G W_k)^T / sqrt(D)), O = A (G W_v). Queries come from
/// the input tokens X; keys and values from the generated tokens G.
template <class T>
CrossAttention<T> cross_attend(const Var<T>& input_tokens, const Var<T>& generated_tokens,
                               const Var<T>& w_query, const Var<T>& w_key,
                               const Var<T>& w_value) {
  const auto& xs = input_tokens.shape();
  const auto& gs = generated_tokens.shape();
  if (xs.size() != 2 || gs.size() != 2 || xs[1] != gs[1] || xs[0] != gs[0]) {
    throw DimensionError("cross_attend: token grids " + shape_string(xs) + " and " +
                         shape_string(gs) + " differ");
  }
  const Var<T> q = matmul(input_tokens, w_query);
  const Var<T> k = matmul(generated_tokens, w_key);
  const Var<T> v = matmul(generated_tokens, w_value);
  const T scale = T{1} / std::sqrt(static_cast<T>(w_query.shape()[1]));
  const Var<T> a = softmax_rows(affine(matmul(q, transpose(k)), scale, T{0}));
  return {a, matmul(a, v)};
}

/// Rows through W_d, back to [C x H x W], standardized over the whole image
/// (variance floor eps), then clamped to [0, 1]. Standardized values are
/// already in pixel units, so no extra scaling is applied.
template <class T>
Var<T> project_to_image_var(const Var<T>& tokens, const Var<T>& w_out, std::size_t channels,
                            std::size_t height, std::size_t width, std::size_t patch, double eps,
                            ClampGrad clamp_grad = ClampGrad::exact) {
  const Var<T> pixels = unpatchify(matmul(tokens, w_out), channels, height, width, patch);
  return clamp01(standardize(pixels, static_cast<T>(eps)), clamp_grad);
}

/// Full reference-image stack on tensors: patchify both, shared embedding,
/// cross-attention, projection.
template <class T>
Var<T> make_reference_var(const Var<T>& input_chw, const Var<T>& generated_chw,
                          const AttentionVars<T>& p, const AttentionConfig& cfg) {
  const auto& s = input_chw.shape();
  if (s != generated_chw.shape()) {
    throw DimensionError("make_reference: input " + shape_string(s) + " vs generated " +
                         shape_string(generated_chw.shape()));
  }
  cfg.validate(s[1], s[2]);
  const Var<T> x = embed(patchify(input_chw, cfg.patch_size), p.embed);
  const Var<T> g = embed(patchify(generated_chw, cfg.patch_size), p.embed);
  const auto attn = cross_attend(x, g, p.query, p.key, p.value);
  return project_to_image_var(attn.output, p.out, s[0], s[1], s[2], cfg.patch_size, cfg.eps);
}

template <class T>
Image make_reference(const Image& input, const Image& generated, const AttentionParams<T>& params,
                     const AttentionConfig& cfg) {
  require_same_dims(input, generated, "make_reference");
  Tape<T> tape;
  const auto vars = AttentionVars<T>::constant(tape, params);
  return from_chw(
      make_reference_var(tape.constant(to_chw<T>(input)), tape.constant(to_chw<T>(generated)),
                         vars, cfg)
          .value());
}

}  // namespace camofa
