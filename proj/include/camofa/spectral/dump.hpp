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

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "camofa/spectral/spectrum.hpp"

// Single-channel spectrum dump:
//   "CFSP" | u32 version = 1 | u32 H | u32 W | H*W x (f64 re, f64 im)
// all little-endian, centered layout, row-major.

namespace camofa {

inline constexpr char kSpectrumMagic[4] = {'C', 'F', 'S', 'P'};
inline constexpr std::uint32_t kSpectrumVersion = 1;

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace le {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline void put_f64(std::string& out, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, sizeof bits);
  put_u64(out, bits);
}

inline void put_f32(std::string& out, float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, sizeof bits);
  put_u32(out, bits);
}

inline std::uint32_t get_u32(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return v;
}

inline std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

inline double get_f64(const unsigned char* p) {
  const std::uint64_t bits = get_u64(p);
  double d;
  std::memcpy(&d, &bits, sizeof d);
  return d;
}

inline float get_f32(const unsigned char* p) {
  const std::uint32_t bits = get_u32(p);
  float f;
  std::memcpy(&f, &bits, sizeof f);
  return f;
}

}  // namespace le

inline std::string encode_spectrum_channel(const Spectrum& spec, std::size_t channel) {
  const auto& ch = spec.channels.at(channel);
  std::string out(kSpectrumMagic, 4);
  le::put_u32(out, kSpectrumVersion);
  le::put_u32(out, static_cast<std::uint32_t>(spec.height));
  le::put_u32(out, static_cast<std::uint32_t>(spec.width));
  for (const auto& v : ch) {
    le::put_f64(out, v.real());
    le::put_f64(out, v.imag());
  }
  return out;
}

/// Decodes one channel dump into a single-channel Spectrum.
inline Spectrum decode_spectrum_channel(const std::string& bytes) {
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() < 16) throw FormatError("spectrum dump: truncated header");
  if (std::memcmp(p, kSpectrumMagic, 4) != 0) throw FormatError("spectrum dump: bad magic");
  if (le::get_u32(p + 4) != kSpectrumVersion) {
    throw FormatError("spectrum dump: unsupported version " + std::to_string(le::get_u32(p + 4)));
  }
  Spectrum spec{le::get_u32(p + 8), le::get_u32(p + 12), {}};
  const std::size_t expected = 16 + spec.height * spec.width * 16;
  if (bytes.size() != expected) {
    throw FormatError("spectrum dump: expected " + std::to_string(expected) + " bytes, got " +
                      std::to_string(bytes.size()));
  }
  std::vector<fft::Complex> ch(spec.height * spec.width);
  for (std::size_t i = 0; i < ch.size(); ++i)
    ch[i] = {le::get_f64(p + 16 + 16 * i), le::get_f64(p + 24 + 16 * i)};
  spec.channels.push_back(std::move(ch));
  return spec;
}

inline void write_spectrum_channel(const std::string& path, const Spectrum& spec,
                                   std::size_t channel) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  const std::string bytes = encode_spectrum_channel(spec, channel);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

inline Spectrum read_spectrum_channel(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_spectrum_channel(bytes);
}

}  // namespace camofa
