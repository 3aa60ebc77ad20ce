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
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "camofa/numerics/tensor.hpp"

namespace camofa {

/// H x W x C pixel grid, channel-interleaved row-major, values in [0, 1].
struct Image {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 3;
  std::vector<float> pixels;

  Image() = default;
  Image(std::size_t h, std::size_t w, std::size_t c, float fill = 0.0f)
      : height(h), width(w), channels(c), pixels(h * w * c, fill) {
    if (h == 0 || w == 0 || c == 0) {
      throw DimensionError("image extents must be positive, got " + std::to_string(h) + "x" +
                           std::to_string(w) + "x" + std::to_string(c));
    }
  }

  float& at(std::size_t y, std::size_t x, std::size_t c) {
    return pixels[(y * width + x) * channels + c];
  }
  float at(std::size_t y, std::size_t x, std::size_t c) const {
    return pixels[(y * width + x) * channels + c];
  }

  bool same_dims(const Image& o) const {
    return height == o.height && width == o.width && channels == o.channels;
  }

  std::string dims_string() const {
    return std::to_string(height) + "x" + std::to_string(width) + "x" + std::to_string(channels);
  }

  friend bool operator==(const Image&, const Image&) = default;
};

inline void require_same_dims(const Image& a, const Image& b, const char* what) {
  if (!a.same_dims(b)) {
    throw DimensionError(std::string(what) + ": image dims differ " + a.dims_string() + " vs " +
                         b.dims_string());
  }
}

/// Image -> [C x H x W] tensor.
template <class T>
Tensor<T> to_chw(const Image& img) {
  Tensor<T> out({img.channels, img.height, img.width});
  for (std::size_t c = 0; c < img.channels; ++c)
    for (std::size_t y = 0; y < img.height; ++y)
      for (std::size_t x = 0; x < img.width; ++x)
        out[(c * img.height + y) * img.width + x] = static_cast<T>(img.at(y, x, c));
  return out;
}

/// [C x H x W] tensor -> Image, clamped to [0, 1].
template <class T>
Image from_chw(const Tensor<T>& t) {
  if (t.rank() != 3) throw DimensionError("from_chw: expected rank 3, got " + shape_string(t.shape()));
  Image img(t.dim(1), t.dim(2), t.dim(0));
  for (std::size_t c = 0; c < img.channels; ++c)
    for (std::size_t y = 0; y < img.height; ++y)
      for (std::size_t x = 0; x < img.width; ++x)
        img.at(y, x, c) = static_cast<float>(
            std::clamp<double>(t[(c * img.height + y) * img.width + x], 0.0, 1.0));
  return img;
}

}  // namespace camofa
