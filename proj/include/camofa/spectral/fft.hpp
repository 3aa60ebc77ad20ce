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
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

// Exact discrete Fourier transforms. Power-of-two lengths use an iterative
// radix-2 FFT; other lengths fall back to the direct O(n^2) sum. Neither
// path normalizes; the 2D inverse divides by H*W.

namespace camofa::fft {

using Complex = std::complex<double>;

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// exp(sign * 2 pi i * k / n) with k reduced mod n first so the angle stays small.
inline Complex twiddle(std::size_t k, std::size_t n, double sign) {
  const double angle = sign * 2.0 * std::numbers::pi * static_cast<double>(k % n) /
                       static_cast<double>(n);
  return {std::cos(angle), std::sin(angle)};
}

inline void radix2(std::span<Complex> a, bool inverse) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  const double sign = inverse ? 1.0 : -1.0;
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    for (std::size_t j = 0; j < half; ++j) {
      const Complex w = twiddle(j, len, sign);
      for (std::size_t i = 0; i < n; i += len) {
        const Complex u = a[i + j];
        const Complex v = a[i + j + half] * w;
        a[i + j] = u + v;
        a[i + j + half] = u - v;
      }
    }
  }
}

inline void direct(std::span<Complex> a, bool inverse) {
  const std::size_t n = a.size();
  const double sign = inverse ? 1.0 : -1.0;
  std::vector<Complex> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    Complex acc{};
    for (std::size_t j = 0; j < n; ++j) acc += a[j] * twiddle(k * j, n, sign);
    out[k] = acc;
  }
  std::copy(out.begin(), out.end(), a.begin());
}

/// Unnormalized 1D DFT in place; inverse uses the +i kernel.
inline void transform(std::span<Complex> a, bool inverse) {
  if (a.size() <= 1) return;
  if (is_power_of_two(a.size())) {
    radix2(a, inverse);
  } else {
    direct(a, inverse);
  }
}

/// 2D DFT of a row-major H x W grid in place (raw layout, DC at (0,0)).
/// The inverse is normalized by 1/(H*W).
inline void transform2d(std::vector<Complex>& grid, std::size_t h, std::size_t w, bool inverse) {
  for (std::size_t y = 0; y < h; ++y) transform(std::span(grid).subspan(y * w, w), inverse);
  std::vector<Complex> column(h);
  for (std::size_t x = 0; x < w; ++x) {
    for (std::size_t y = 0; y < h; ++y) column[y] = grid[y * w + x];
    transform(column, inverse);
    for (std::size_t y = 0; y < h; ++y) grid[y * w + x] = column[y];
  }
  if (inverse) {
    const double scale = 1.0 / static_cast<double>(h * w);
    for (auto& v : grid) v *= scale;
  }
}

/// Raw layout -> centered layout: raw bin (0,0) lands at (H/2, W/2).
template <class V>
std::vector<V> center(const std::vector<V>& raw, std::size_t h, std::size_t w) {
  std::vector<V> out(raw.size());
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      out[((y + h / 2) % h) * w + (x + w / 2) % w] = raw[y * w + x];
  return out;
}

/// Centered layout -> raw layout.
template <class V>
std::vector<V> uncenter(const std::vector<V>& centered, std::size_t h, std::size_t w) {
  std::vector<V> out(centered.size());
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      out[y * w + x] = centered[((y + h / 2) % h) * w + (x + w / 2) % w];
  return out;
}

}  // namespace camofa::fft
