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

#include <complex>
#include <cstddef>
#include <vector>

#include "camofa/numerics/ops.hpp"
#include "camofa/spectral/spectrum.hpp"

namespace camofa {

/// Differentiable hybrid amplitude swap on [C x H x W] tensors.
///
/// Returns Re(F^-1(M*|F(ref)| + (1-M)*|F(input)|, arg F(input))) before any
/// clamping. `input` is data: its phase and amplitude are constants, so the
/// gradient flows only into `reference`, through its amplitude. Bins where
/// |F(ref)| = 0 pass no gradient.
template <class T>
Var<T> hybrid_swap_var(const Var<T>& reference, const Tensor<T>& input, const FreqMask& mask) {
  ++spectral::call_counter();
  const auto& ref = reference.value();
  ref.require_same_shape(input, "hybrid_swap_var");
  if (ref.rank() != 3 || mask.height != ref.dim(1) || mask.width != ref.dim(2)) {
    throw DimensionError("hybrid_swap_var: mask " + std::to_string(mask.height) + "x" +
                         std::to_string(mask.width) + " does not fit " + shape_string(ref.shape()));
  }
  const std::size_t channels = ref.dim(0), h = ref.dim(1), w = ref.dim(2), plane = h * w;
  const std::vector<std::uint8_t> raw_mask = fft::uncenter(mask.ones, h, w);

  // Per channel: unit phasor of the input and of the reference, raw layout.
  std::vector<std::vector<fft::Complex>> input_phasor(channels), ref_phasor(channels);
  Tensor<T> out(ref.shape());
  std::vector<fft::Complex> fi(plane), fr(plane);
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t i = 0; i < plane; ++i) {
      fi[i] = static_cast<double>(input[c * plane + i]);
      fr[i] = static_cast<double>(ref[c * plane + i]);
    }
    fft::transform2d(fi, h, w, false);
    fft::transform2d(fr, h, w, false);
    auto& up = input_phasor[c];
    auto& vp = ref_phasor[c];
    up.resize(plane);
    vp.resize(plane);
    std::vector<fft::Complex> mixed(plane);
    for (std::size_t i = 0; i < plane; ++i) {
      const double amp_in = std::abs(fi[i]);
      const double amp_ref = std::abs(fr[i]);
      up[i] = std::polar(1.0, wrap_phase(std::arg(fi[i])));
      vp[i] = amp_ref > 0.0 ? fr[i] / amp_ref : fft::Complex{};
      const double m = raw_mask[i];
      mixed[i] = (m * amp_ref + (1.0 - m) * amp_in) * up[i];
    }
    fft::transform2d(mixed, h, w, true);
    for (std::size_t i = 0; i < plane; ++i) out[c * plane + i] = static_cast<T>(mixed[i].real());
  }

  return reference.tape()->record(
      "hybrid_swap", std::move(out), {reference},
      [reference, raw_mask, input_phasor = std::move(input_phasor),
       ref_phasor = std::move(ref_phasor), channels, h, w](Tape<T>& t, const Tensor<T>& g) {
        const std::size_t plane = h * w;
        auto& gr = t.grad(reference.id());
        std::vector<fft::Complex> buf(plane);
        for (std::size_t c = 0; c < channels; ++c) {
          for (std::size_t i = 0; i < plane; ++i) buf[i] = static_cast<double>(g[c * plane + i]);
          fft::transform2d(buf, h, w, true);
          for (std::size_t i = 0; i < plane; ++i) {
            const double g_amp = raw_mask[i] ? (input_phasor[c][i] * buf[i]).real() : 0.0;
            buf[i] = g_amp * std::conj(ref_phasor[c][i]);
          }
          fft::transform2d(buf, h, w, false);
          for (std::size_t i = 0; i < plane; ++i) gr[c * plane + i] += static_cast<T>(buf[i].real());
        }
      });
}

}  // namespace camofa
