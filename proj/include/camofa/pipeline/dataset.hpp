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
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "camofa/numerics/rng.hpp"
#include "camofa/spectral/image.hpp"

namespace camofa {

/// Procedural camouflage scenes: a value-noise background and one ellipse
/// or rectangle whose texture is blended toward the background by kappa.
struct SyntheticCamoConfig {
  std::size_t image_size = 32;
  std::size_t octaves = 3;
  std::size_t base_cells = 4;       // lattice cells per side at the coarsest octave
  double palette_spread = 0.35;     // max distance of the two palette colors from their mean
  double kappa = 0.8;               // 0: distinct object, 1: object texture == background
  std::size_t count = 384;
  std::uint64_t seed = 0;
  double min_object_frac = 0.25;    // object radius bounds, fraction of image size
  double max_object_frac = 0.45;
};

struct Sample {
  Image image;
  std::vector<std::uint8_t> mask;  // H x W, exactly {0, 1}
};

struct Split {
  std::vector<std::size_t> train, val, test;
};

/// Contiguous partition: first n_train, then n_val, then the rest.
inline Split split_indices(std::size_t count, std::size_t n_train, std::size_t n_val) {
  if (n_train + n_val > count) throw std::invalid_argument("split: train + val exceeds dataset size");
  Split s;
  for (std::size_t i = 0; i < count; ++i) {
    (i < n_train ? s.train : i < n_train + n_val ? s.val : s.test).push_back(i);
  }
  return s;
}

namespace detail {

/// Multi-octave value noise in [0, 1], bilinear with smoothstep easing.
inline std::vector<double> value_noise(std::size_t size, std::size_t octaves, std::size_t base_cells,
                                       Rng& rng) {
  std::vector<double> out(size * size, 0.0);
  double amplitude = 1.0, total = 0.0;
  std::size_t cells = base_cells;
  for (std::size_t o = 0; o < octaves; ++o) {
    const std::size_t n = cells + 1;
    std::vector<double> lattice(n * n);
    for (auto& v : lattice) v = rng.uniform();
    const double scale = static_cast<double>(cells) / static_cast<double>(size);
    for (std::size_t y = 0; y < size; ++y) {
      const double fy = (static_cast<double>(y) + 0.5) * scale;
      const std::size_t y0 = std::min(static_cast<std::size_t>(fy), cells - 1);
      double ty = fy - static_cast<double>(y0);
      ty = ty * ty * (3.0 - 2.0 * ty);
      for (std::size_t x = 0; x < size; ++x) {
        const double fx = (static_cast<double>(x) + 0.5) * scale;
        const std::size_t x0 = std::min(static_cast<std::size_t>(fx), cells - 1);
        double tx = fx - static_cast<double>(x0);
        tx = tx * tx * (3.0 - 2.0 * tx);
        const double a = lattice[y0 * n + x0], b = lattice[y0 * n + x0 + 1];
        const double c = lattice[(y0 + 1) * n + x0], d = lattice[(y0 + 1) * n + x0 + 1];
        out[y * size + x] += amplitude * ((a * (1 - tx) + b * tx) * (1 - ty) + (c * (1 - tx) + d * tx) * ty);
      }
    }
    total += amplitude;
    amplitude *= 0.5;
    cells *= 2;
  }
  for (auto& v : out) v /= total;
  return out;
}

struct Palette {
  std::array<double, 3> a, b;
};

inline Palette random_palette(double spread, Rng& rng) {
  Palette p;
  for (std::size_t c = 0; c < 3; ++c) {
    const double mid = rng.uniform(spread, 1.0 - spread);
    const double half = rng.uniform(0.3, 1.0) * spread;
    p.a[c] = mid - half;
    p.b[c] = mid + half;
  }
  return p;
}

inline double shade(const Palette& p, std::size_t c, double t) { return p.a[c] * (1 - t) + p.b[c] * t; }

}  // namespace detail

/// One sample from a dedicated stream; `generate_dataset` forks one per index.
inline Sample generate_sample(const SyntheticCamoConfig& cfg, Rng rng) {
  const std::size_t n = cfg.image_size;
  const double kappa = cfg.kappa;
  const auto bg_palette = detail::random_palette(cfg.palette_spread, rng);
  const auto obj_palette = detail::random_palette(cfg.palette_spread, rng);
  const auto bg_noise = detail::value_noise(n, cfg.octaves, cfg.base_cells, rng);
  const auto obj_noise = detail::value_noise(n, cfg.octaves, cfg.base_cells, rng);

  const double size = static_cast<double>(n);
  const double rx = rng.uniform(cfg.min_object_frac, cfg.max_object_frac) * size / 2.0 + 1.0;
  const double ry = rng.uniform(cfg.min_object_frac, cfg.max_object_frac) * size / 2.0 + 1.0;
  const double cx = rng.uniform(rx, size - rx);
  const double cy = rng.uniform(ry, size - ry);
  const bool ellipse = rng.uniform() < 0.5;

  // Radii are at least one pixel, so the pixel holding (cx, cy) is always
  // inside and the mask is never empty.
  Sample s{Image(n, n, 3), std::vector<std::uint8_t>(n * n, 0)};
  for (std::size_t y = 0; y < n; ++y) {
    for (std::size_t x = 0; x < n; ++x) {
      const double dx = (static_cast<double>(x) + 0.5 - cx) / rx;
      const double dy = (static_cast<double>(y) + 0.5 - cy) / ry;
      const bool inside = ellipse ? dx * dx + dy * dy <= 1.0 : std::abs(dx) <= 1.0 && std::abs(dy) <= 1.0;
      s.mask[y * n + x] = inside ? 1 : 0;
      for (std::size_t c = 0; c < 3; ++c) {
        double v = detail::shade(bg_palette, c, bg_noise[y * n + x]);
        if (inside) {
          const double t = obj_noise[y * n + x];
          v = (1.0 - kappa) * detail::shade(obj_palette, c, t) + kappa * detail::shade(bg_palette, c, t);
        }
        s.image.at(y, x, c) = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
    }
  }
  return s;
}

inline std::vector<Sample> generate_dataset(const SyntheticCamoConfig& cfg) {
  if (cfg.count < 1) throw std::invalid_argument("generate_dataset: count must be >= 1");
  if (cfg.kappa < 0.0 || cfg.kappa > 1.0) throw std::invalid_argument("generate_dataset: kappa must lie in [0, 1]");
  if (cfg.image_size < 4) throw std::invalid_argument("generate_dataset: image_size must be >= 4");
  Rng root(cfg.seed);
  std::vector<Sample> out;
  out.reserve(cfg.count);
  for (std::size_t i = 0; i < cfg.count; ++i) out.push_back(generate_sample(cfg, Rng(root.next_u64())));
  return out;
}

inline std::vector<Image> images_of(const std::vector<Sample>& samples,
                                    const std::vector<std::size_t>& idx) {
  std::vector<Image> out;
  for (std::size_t i : idx) out.push_back(samples.at(i).image);
  return out;
}

inline std::vector<Sample> subset(const std::vector<Sample>& samples, const std::vector<std::size_t>& idx) {
  std::vector<Sample> out;
  for (std::size_t i : idx) out.push_back(samples.at(i));
  return out;
}

}  // namespace camofa
