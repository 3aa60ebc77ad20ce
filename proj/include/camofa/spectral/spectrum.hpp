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

#include <atomic>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "camofa/spectral/fft.hpp"
#include "camofa/spectral/image.hpp"

namespace camofa {

/// The inverse transform produced a non-negligible imaginary part, i.e. the
/// spectrum was not Hermitian.
class SymmetryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Largest |imaginary part| ifft2_real tolerates before failing.
inline constexpr double kImagTolerance = 1e-4;

namespace spectral {

/// Counts entries into spectral code; lets tests prove a path never ran.
inline std::atomic<std::size_t>& call_counter() {
  static std::atomic<std::size_t> counter{0};
  return counter;
}
inline std::size_t call_count() { return call_counter().load(); }

}  // namespace spectral

/// Per-channel H x W complex grid in centered layout: raw bin (0,0) sits at
/// (H/2, W/2) (integer division).
struct Spectrum {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::vector<fft::Complex>> channels;

  std::size_t channel_count() const noexcept { return channels.size(); }
  bool same_dims(const Spectrum& o) const {
    return height == o.height && width == o.width && channels.size() == o.channels.size();
  }
};

/// Per-channel H x W grid of reals in centered layout.
struct SpectralMap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::vector<double>> channels;

  bool same_dims(const SpectralMap& o) const {
    return height == o.height && width == o.width && channels.size() == o.channels.size();
  }
};

/// |F|, always >= 0.
struct AmplitudeMap : SpectralMap {};
/// arg F in (-pi, pi].
struct PhaseMap : SpectralMap {};

/// Real planes [C x H x W] from an inverse transform, before clamping.
struct RealPlanes {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;
  std::vector<double> values;
  double max_imag = 0.0;

  double at(std::size_t c, std::size_t y, std::size_t x) const {
    return values[(c * height + y) * width + x];
  }
};

inline Spectrum fft2(const Image& img) {
  ++spectral::call_counter();
  Spectrum out{img.height, img.width, {}};
  std::vector<fft::Complex> grid(img.height * img.width);
  for (std::size_t c = 0; c < img.channels; ++c) {
    for (std::size_t y = 0; y < img.height; ++y)
      for (std::size_t x = 0; x < img.width; ++x) grid[y * img.width + x] = img.at(y, x, c);
    fft::transform2d(grid, img.height, img.width, false);
    out.channels.push_back(fft::center(grid, img.height, img.width));
  }
  return out;
}

/// Inverse transform keeping the real part unclamped; max_imag records the
/// largest discarded imaginary component.
inline RealPlanes inverse_planes(const Spectrum& spec) {
  RealPlanes out{spec.height, spec.width, spec.channel_count(), {}, 0.0};
  out.values.reserve(spec.height * spec.width * spec.channel_count());
  for (const auto& centered : spec.channels) {
    auto grid = fft::uncenter(centered, spec.height, spec.width);
    fft::transform2d(grid, spec.height, spec.width, true);
    for (const auto& v : grid) {
      out.values.push_back(v.real());
      out.max_imag = std::max(out.max_imag, std::abs(v.imag()));
    }
  }
  return out;
}

inline Image planes_to_image(const RealPlanes& planes) {
  Image img(planes.height, planes.width, planes.channels);
  for (std::size_t c = 0; c < planes.channels; ++c)
    for (std::size_t y = 0; y < planes.height; ++y)
      for (std::size_t x = 0; x < planes.width; ++x)
        img.at(y, x, c) = static_cast<float>(std::clamp(planes.at(c, y, x), 0.0, 1.0));
  return img;
}

/// Inverse transform to an Image clamped to [0, 1]. Throws SymmetryError
/// when the imaginary residual exceeds kImagTolerance.
inline Image ifft2_real(const Spectrum& spec) {
  const RealPlanes planes = inverse_planes(spec);
  if (planes.max_imag > kImagTolerance) {
    throw SymmetryError("ifft2_real: imaginary residual " + std::to_string(planes.max_imag) +
                        " exceeds " + std::to_string(kImagTolerance) +
                        "; spectrum is not Hermitian");
  }
  return planes_to_image(planes);
}

inline double wrap_phase(double phase) {
  return phase <= -std::numbers::pi ? std::numbers::pi : phase;
}

inline std::pair<AmplitudeMap, PhaseMap> decompose(const Spectrum& spec) {
  AmplitudeMap amp;
  PhaseMap phase;
  amp.height = phase.height = spec.height;
  amp.width = phase.width = spec.width;
  for (const auto& ch : spec.channels) {
    std::vector<double> a(ch.size()), p(ch.size());
    for (std::size_t i = 0; i < ch.size(); ++i) {
      a[i] = std::abs(ch[i]);
      p[i] = wrap_phase(std::arg(ch[i]));
    }
    amp.channels.push_back(std::move(a));
    phase.channels.push_back(std::move(p));
  }
  return {std::move(amp), std::move(phase)};
}

inline Spectrum recompose(const AmplitudeMap& amp, const PhaseMap& phase) {
  if (!amp.same_dims(phase)) {
    throw DimensionError("recompose: amplitude and phase maps differ in shape");
  }
  Spectrum out{amp.height, amp.width, {}};
  for (std::size_t c = 0; c < amp.channels.size(); ++c) {
    std::vector<fft::Complex> ch(amp.channels[c].size());
    for (std::size_t i = 0; i < ch.size(); ++i)
      ch[i] = std::polar(amp.channels[c][i], phase.channels[c][i]);
    out.channels.push_back(std::move(ch));
  }
  return out;
}

/// Binary low-frequency mask in centered layout.
///
/// Bin (u, v) is one iff |u - H/2| <= beta*H/2 and |v - W/2| <= beta*W/2,
/// so beta is the fraction of each axis covered and beta = 1 selects every
/// bin. The rule is symmetric under frequency negation; an even-size
/// Nyquist row/column is only reached at beta = 1.
struct FreqMask {
  double beta = 1.0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> ones;

  bool at(std::size_t u, std::size_t v) const { return ones[u * width + v] != 0; }
  std::size_t count() const {
    std::size_t n = 0;
    for (auto o : ones) n += o;
    return n;
  }
};

/// Half-width in bins along an axis of length n. The small slack absorbs
/// rounding in products like 0.29 * 100 / 2.
inline std::size_t mask_half_width(double beta, std::size_t n) {
  return static_cast<std::size_t>(std::floor(beta * static_cast<double>(n) / 2.0 + 1e-9));
}

inline FreqMask make_mask(double beta, std::size_t height, std::size_t width) {
  if (!(beta > 0.0 && beta <= 1.0)) {
    throw std::domain_error("make_mask: beta must lie in (0, 1], got " + std::to_string(beta));
  }
  if (height == 0 || width == 0) throw DimensionError("make_mask: empty grid");
  FreqMask mask{beta, height, width, std::vector<std::uint8_t>(height * width, 0)};
  const std::size_t hu = mask_half_width(beta, height);
  const std::size_t hv = mask_half_width(beta, width);
  const std::size_t cu = height / 2, cv = width / 2;
  for (std::size_t u = 0; u < height; ++u) {
    const std::size_t du = u > cu ? u - cu : cu - u;
    if (du > hu) continue;
    for (std::size_t v = 0; v < width; ++v) {
      const std::size_t dv = v > cv ? v - cv : cv - v;
      if (dv <= hv) mask.ones[u * width + v] = 1;
    }
  }
  return mask;
}

namespace detail {

inline void require_swap_dims(const Image& input, const Image& reference) {
  require_same_dims(input, reference, "amplitude swap");
}

}  // namespace detail

/// Spectrum carrying the reference amplitude and the input phase.
inline Spectrum basic_swap_spectrum(const Image& input, const Image& reference) {
  detail::require_swap_dims(input, reference);
  auto [amp_in, phase_in] = decompose(fft2(input));
  auto [amp_ref, phase_ref] = decompose(fft2(reference));
  return recompose(amp_ref, phase_in);
}

/// Spectrum with amplitude M*A_ref + (1-M)*A_in and the input phase.
inline Spectrum hybrid_swap_spectrum(const Image& input, const Image& reference,
                                     const FreqMask& mask) {
  detail::require_swap_dims(input, reference);
  if (mask.height != input.height || mask.width != input.width) {
    throw DimensionError("hybrid swap: mask is " + std::to_string(mask.height) + "x" +
                         std::to_string(mask.width) + ", image is " + input.dims_string());
  }
  auto [amp_in, phase_in] = decompose(fft2(input));
  auto [amp_ref, phase_ref] = decompose(fft2(reference));
  AmplitudeMap mixed = amp_in;
  for (std::size_t c = 0; c < mixed.channels.size(); ++c) {
    for (std::size_t i = 0; i < mask.ones.size(); ++i) {
      const double m = mask.ones[i];
      mixed.channels[c][i] = m * amp_ref.channels[c][i] + (1.0 - m) * amp_in.channels[c][i];
    }
  }
  return recompose(mixed, phase_in);
}

inline Spectrum hybrid_swap_spectrum(const Image& input, const Image& reference, double beta) {
  return hybrid_swap_spectrum(input, reference, make_mask(beta, input.height, input.width));
}

inline RealPlanes basic_swap_planes(const Image& input, const Image& reference) {
  return inverse_planes(basic_swap_spectrum(input, reference));
}

inline RealPlanes hybrid_swap_planes(const Image& input, const Image& reference, double beta) {
  return inverse_planes(hybrid_swap_spectrum(input, reference, beta));
}

/// Amplitude wholly from `reference`, phase wholly from `input`.
inline Image basic_swap(const Image& input, const Image& reference) {
  return ifft2_real(basic_swap_spectrum(input, reference));
}

/// Reference amplitude inside the centered mask, input amplitude outside,
/// input phase everywhere.
inline Image hybrid_swap(const Image& input, const Image& reference, double beta) {
  return ifft2_real(hybrid_swap_spectrum(input, reference, beta));
}

}  // namespace camofa
