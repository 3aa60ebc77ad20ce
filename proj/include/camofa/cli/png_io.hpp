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

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "camofa/spectral/image.hpp"

// 8-bit PNG through libpng's simplified API. Pixels map to bytes as
// round(v * 255) and back as b / 255.

namespace camofa {

class ImageIoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::uint8_t to_byte(float v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
}

/// Reads any PNG as RGB (channels == 3) or grayscale (channels == 1).
inline Image read_png(const std::string& path, std::size_t channels = 3) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str())) {
    throw ImageIoError("cannot read PNG " + path + ": " + img.message);
  }
  img.format = channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, buf.data(), 0, nullptr)) {
    const std::string msg = img.message;
    png_image_free(&img);
    throw ImageIoError("cannot decode PNG " + path + ": " + msg);
  }
  if (img.width == 0 || img.height == 0) throw ImageIoError("empty PNG " + path);
  Image out(img.height, img.width, channels);
  for (std::size_t i = 0; i < buf.size(); ++i) out.pixels[i] = static_cast<float>(buf[i]) / 255.0f;
  return out;
}

inline void write_png(const std::string& path, const Image& image) {
  if (image.channels != 1 && image.channels != 3) {
    throw ImageIoError("write_png: only 1 or 3 channels, got " + std::to_string(image.channels));
  }
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width);
  img.height = static_cast<png_uint_32>(image.height);
  img.format = image.channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  std::vector<std::uint8_t> buf(image.pixels.size());
  std::transform(image.pixels.begin(), image.pixels.end(), buf.begin(), to_byte);
  if (!png_image_write_to_file(&img, path.c_str(), 0, buf.data(), 0, nullptr)) {
    throw ImageIoError("cannot write PNG " + path + ": " + img.message);
  }
}

/// Binary mask as a grayscale PNG (0 or 255).
inline void write_mask_png(const std::string& path, const std::vector<std::uint8_t>& mask, std::size_t height,
                           std::size_t width) {
  Image img(height, width, 1);
  for (std::size_t i = 0; i < mask.size(); ++i) img.pixels[i] = mask[i] ? 1.0f : 0.0f;
  write_png(path, img);
}

inline std::vector<std::uint8_t> read_mask_png(const std::string& path) {
  const Image img = read_png(path, 1);
  std::vector<std::uint8_t> mask(img.pixels.size());
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = img.pixels[i] >= 0.5f ? 1 : 0;
  return mask;
}

}  // namespace camofa
