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
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "camofa/numerics.hpp"
#include "camofa/spectral/dump.hpp"

// CFCK container:
//   "CFCK" | u32 version = 1 | u32 header_length | JSON header | payload
// The header is {"tensors": [{name, shape, dtype, byte_offset}, ...]} with
// byte_offset relative to the payload start. Tensors are stored back to back,
// little-endian, in header order.

namespace camofa {

inline constexpr char kCheckpointMagic[4] = {'C', 'F', 'C', 'K'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  enum class Field { magic, version, header, payload_length, tensor };
  CheckpointError(Field field, const std::string& message) : std::runtime_error(message), field_(field) {}
  Field field() const noexcept { return field_; }

 private:
  Field field_;
};

struct TensorEntry {
  std::string name;
  Shape shape;
  std::string dtype;  // "f32" or "f64"
  std::string bytes;  // little-endian payload

  std::size_t element_size() const { return dtype == "f32" ? 4 : 8; }
};

class Checkpoint {
 public:
  template <class T>
  void add(const std::string& name, const Tensor<T>& t) {
    if (index_.count(name)) throw std::invalid_argument("checkpoint: duplicate tensor " + name);
    TensorEntry e{name, t.shape(), dtype_name<T>(), {}};
    e.bytes.reserve(t.size() * sizeof(T));
    for (T v : t.data()) {
      if constexpr (sizeof(T) == 4) le::put_f32(e.bytes, v);
      else le::put_f64(e.bytes, v);
    }
    index_[name] = entries_.size();
    entries_.push_back(std::move(e));
  }

  template <class T>
  void add_all(const std::vector<const Parameter<T>*>& params) {
    for (const auto* p : params) add(p->name, p->value);
  }

  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  const std::vector<TensorEntry>& entries() const noexcept { return entries_; }

  template <class T>
  Tensor<T> get(const std::string& name) const {
    const auto it = index_.find(name);
    if (it == index_.end()) throw CheckpointError(CheckpointError::Field::tensor, "checkpoint: no tensor named " + name);
    const TensorEntry& e = entries_[it->second];
    if (e.dtype != dtype_name<T>()) {
      throw CheckpointError(CheckpointError::Field::tensor,
                            "checkpoint: tensor " + name + " is " + e.dtype + ", requested " + dtype_name<T>());
    }
    Tensor<T> out(e.shape);
    const auto* p = reinterpret_cast<const unsigned char*>(e.bytes.data());
    for (std::size_t i = 0; i < out.size(); ++i) {
      if constexpr (sizeof(T) == 4) out[i] = le::get_f32(p + 4 * i);
      else out[i] = le::get_f64(p + 8 * i);
    }
    return out;
  }

  /// Copies stored values into parameters of the same name and shape.
  template <class T>
  void load_into(const std::vector<Parameter<T>*>& params) const {
    for (auto* p : params) {
      Tensor<T> t = get<T>(p->name);
      if (t.shape() != p->value.shape()) {
        throw CheckpointError(CheckpointError::Field::tensor, "checkpoint: tensor " + p->name + " has shape " +
                                                                  shape_string(t.shape()) + ", expected " +
                                                                  shape_string(p->value.shape()));
      }
      p->value = std::move(t);
      p->zero_grad();
    }
  }

  std::string encode() const {
    nlohmann::json tensors = nlohmann::json::array();
    std::size_t offset = 0;
    for (const auto& e : entries_) {
      tensors.push_back({{"name", e.name}, {"shape", e.shape}, {"dtype", e.dtype}, {"byte_offset", offset}});
      offset += e.bytes.size();
    }
    const std::string header = nlohmann::json{{"tensors", tensors}}.dump();
    std::string out(kCheckpointMagic, 4);
    le::put_u32(out, kCheckpointVersion);
    le::put_u32(out, static_cast<std::uint32_t>(header.size()));
    out += header;
    for (const auto& e : entries_) out += e.bytes;
    return out;
  }

  static Checkpoint decode(const std::string& bytes) {
    using F = CheckpointError::Field;
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    if (bytes.size() < 4 || std::memcmp(p, kCheckpointMagic, 4) != 0) {
      throw CheckpointError(F::magic, "checkpoint: magic mismatch, expected CFCK");
    }
    if (bytes.size() < 12) {
      throw CheckpointError(F::header, "checkpoint: truncated preamble, expected 12 bytes, got " + std::to_string(bytes.size()));
    }
    const std::uint32_t version = le::get_u32(p + 4);
    if (version != kCheckpointVersion) {
      throw CheckpointError(F::version, "checkpoint: version mismatch, expected " + std::to_string(kCheckpointVersion) +
                                            ", got " + std::to_string(version));
    }
    const std::size_t header_len = le::get_u32(p + 8);
    if (bytes.size() < 12 + header_len) {
      throw CheckpointError(F::header, "checkpoint: header truncated, expected " + std::to_string(header_len) +
                                           " bytes, got " + std::to_string(bytes.size() - 12));
    }
    nlohmann::json header;
    try {
      header = nlohmann::json::parse(bytes.substr(12, header_len));
    } catch (const nlohmann::json::exception& e) {
      throw CheckpointError(F::header, std::string("checkpoint: unreadable header: ") + e.what());
    }
    if (!header.contains("tensors") || !header["tensors"].is_array()) {
      throw CheckpointError(F::header, "checkpoint: header has no tensors array");
    }

    Checkpoint ck;
    const std::size_t payload_start = 12 + header_len;
    const std::size_t payload_size = bytes.size() - payload_start;
    std::size_t expected_offset = 0;
    std::vector<std::pair<TensorEntry, std::size_t>> pending;
    try {
      for (const auto& t : header["tensors"]) {
        TensorEntry e{t.at("name").get<std::string>(), t.at("shape").get<Shape>(), t.at("dtype").get<std::string>(), {}};
        if (e.dtype != "f32" && e.dtype != "f64") throw CheckpointError(F::header, "checkpoint: unknown dtype " + e.dtype);
        const std::size_t offset = t.at("byte_offset").get<std::size_t>();
        if (offset != expected_offset) {
          throw CheckpointError(F::header, "checkpoint: tensor " + e.name + " at byte_offset " + std::to_string(offset) +
                                               ", expected " + std::to_string(expected_offset));
        }
        expected_offset += shape_product(e.shape) * e.element_size();
        pending.emplace_back(std::move(e), offset);
      }
    } catch (const nlohmann::json::exception& e) {
      throw CheckpointError(F::header, std::string("checkpoint: malformed tensor entry: ") + e.what());
    }
    if (payload_size != expected_offset) {
      throw CheckpointError(F::payload_length, "checkpoint: payload length mismatch, expected " +
                                                   std::to_string(expected_offset) + " bytes, got " +
                                                   std::to_string(payload_size));
    }
    for (auto& [e, offset] : pending) {
      e.bytes = bytes.substr(payload_start + offset, shape_product(e.shape) * e.element_size());
      if (ck.index_.count(e.name)) throw CheckpointError(F::header, "checkpoint: duplicate tensor " + e.name);
      ck.index_[e.name] = ck.entries_.size();
      ck.entries_.push_back(std::move(e));
    }
    return ck;
  }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    const std::string bytes = encode();
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed: " + path);
  }

  static Checkpoint load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint " + path);
    return decode(std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>()));
  }

 private:
  std::vector<TensorEntry> entries_;
  std::map<std::string, std::size_t> index_;
};

}  // namespace camofa
