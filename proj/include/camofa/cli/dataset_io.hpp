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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "camofa/cli/config.hpp"
#include "camofa/cli/png_io.hpp"
#include "camofa/pipeline/dataset.hpp"

// Dataset directory: img_%05d.png, mask_%05d.png and manifest.json
// {seed, config, count, split: {train, val, test}}.

namespace camofa::cli {

struct DiskDataset {
  std::vector<Sample> samples;
  Split split;
  std::uint64_t seed = 0;
};

inline std::string indexed_name(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%05zu.png", prefix, i);
  return buf;
}

inline nlohmann::json data_config_json(const SyntheticCamoConfig& c) {
  return {{"image_size", c.image_size},         {"octaves", c.octaves},
          {"base_cells", c.base_cells},         {"palette_spread", c.palette_spread},
          {"kappa", c.kappa},                   {"min_object_frac", c.min_object_frac},
          {"max_object_frac", c.max_object_frac}};
}

inline void write_dataset(const std::string& dir, const std::vector<Sample>& samples, const SyntheticCamoConfig& cfg,
                          const Split& split) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    write_png((fs::path(dir) / indexed_name("img", i)).string(), s.image);
    write_mask_png((fs::path(dir) / indexed_name("mask", i)).string(), s.mask, s.image.height, s.image.width);
  }
  const nlohmann::json manifest = {{"seed", cfg.seed},
                                   {"config", data_config_json(cfg)},
                                   {"count", samples.size()},
                                   {"split", {{"train", split.train}, {"val", split.val}, {"test", split.test}}}};
  std::ofstream((fs::path(dir) / "manifest.json").string()) << manifest.dump(2) << "\n";
}

inline DiskDataset read_dataset(const std::string& dir) {
  namespace fs = std::filesystem;
  const auto manifest_path = (fs::path(dir) / "manifest.json").string();
  std::ifstream in(manifest_path);
  if (!in) throw InputError("data_dir", "dataset manifest not found: " + manifest_path);
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InputError("data_dir", "unreadable manifest " + manifest_path + ": " + e.what());
  }
  DiskDataset out;
  try {
    out.seed = m.at("seed").get<std::uint64_t>();
    const auto count = m.at("count").get<std::size_t>();
    out.split.train = m.at("split").at("train").get<std::vector<std::size_t>>();
    out.split.val = m.at("split").at("val").get<std::vector<std::size_t>>();
    out.split.test = m.at("split").at("test").get<std::vector<std::size_t>>();
    for (std::size_t i = 0; i < count; ++i) {
      Sample s{read_png((fs::path(dir) / indexed_name("img", i)).string()),
               read_mask_png((fs::path(dir) / indexed_name("mask", i)).string())};
      if (s.mask.size() != s.image.height * s.image.width) {
        throw InputError("data_dir", "mask " + std::to_string(i) + " does not match its image size");
      }
      out.samples.push_back(std::move(s));
    }
    for (const auto* part : {&out.split.train, &out.split.val, &out.split.test})
      for (std::size_t i : *part)
        if (i >= count) throw InputError("data_dir", "split index " + std::to_string(i) + " out of range");
  } catch (const nlohmann::json::exception& e) {
    throw InputError("data_dir", "malformed manifest " + manifest_path + ": " + e.what());
  } catch (const ImageIoError& e) {
    throw InputError("data_dir", e.what());
  }
  if (out.split.train.empty()) throw InputError("data_dir", "dataset has an empty train split");
  return out;
}

}  // namespace camofa::cli
