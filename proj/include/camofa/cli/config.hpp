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

#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "camofa/attention.hpp"
#include "camofa/pipeline/compare.hpp"

// Run configuration: `key = value` per line, `#` starts a comment. Every key
// has a default; unknown keys are rejected. Values are applied in order
// default < config file < CAMOFA_SEED (seed only) < command-line flag.

namespace camofa::cli {

/// Bad configuration or input. `key` names the offending key or path.
class InputError : public std::runtime_error {
 public:
  InputError(std::string key, const std::string& message)
      : std::runtime_error(message), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

struct RunConfig {
  // paths
  std::string data_dir = "data";
  std::string checkpoint = "camofa.cfck";
  std::string loss_log = "losses.jsonl";
  std::string trace = "beta_trace.json";
  std::string report = "report.json";
  // dataset generation
  std::size_t count = 384;
  std::size_t n_train = 256;
  std::size_t n_val = 64;
  double kappa = 0.8;
  // architecture
  std::size_t image_size = 32;
  std::size_t base_width = 16;
  std::size_t patch_size = 8;
  std::size_t token_dim = 64;
  double attn_eps = 1e-5;
  // GAN training
  double lambda_l1 = 100.0;
  double lr = 1e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  std::size_t batch_size = 8;
  std::size_t steps = 200;
  // segmenter
  std::size_t seg_steps = 1000;
  std::size_t seg_width = 16;
  double seg_lr = 1e-3;
  // hybrid swap and its search
  double beta = 0.1;
  std::size_t beta_budget = 20;
  std::size_t search_steps = 60;
  std::size_t eval_seeds = 5;
  std::uint64_t seed = 0;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class N>
N parse_number(const std::string& key, const std::string& text) {
  N out{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, out);
  if (ec != std::errc{} || ptr != end) {
    throw InputError(key, "config: cannot parse '" + text + "' as a number for key '" + key + "'");
  }
  return out;
}

}  // namespace detail

/// Sets one key from its textual value.
inline void set_value(RunConfig& c, const std::string& key, const std::string& raw) {
  const std::string v = detail::trim(raw);
  auto size = [&](std::size_t& dst) { dst = detail::parse_number<std::size_t>(key, v); };
  auto real = [&](double& dst) { dst = detail::parse_number<double>(key, v); };
  if (key == "data_dir") c.data_dir = v;
  else if (key == "checkpoint") c.checkpoint = v;
  else if (key == "loss_log") c.loss_log = v;
  else if (key == "trace") c.trace = v;
  else if (key == "report") c.report = v;
  else if (key == "count") size(c.count);
  else if (key == "n_train") size(c.n_train);
  else if (key == "n_val") size(c.n_val);
  else if (key == "kappa") real(c.kappa);
  else if (key == "image_size") size(c.image_size);
  else if (key == "base_width") size(c.base_width);
  else if (key == "patch_size") size(c.patch_size);
  else if (key == "token_dim") size(c.token_dim);
  else if (key == "attn_eps") real(c.attn_eps);
  else if (key == "lambda_l1") real(c.lambda_l1);
  else if (key == "lr") real(c.lr);
  else if (key == "beta1") real(c.beta1);
  else if (key == "beta2") real(c.beta2);
  else if (key == "batch_size") size(c.batch_size);
  else if (key == "steps") size(c.steps);
  else if (key == "seg_steps") size(c.seg_steps);
  else if (key == "seg_width") size(c.seg_width);
  else if (key == "seg_lr") real(c.seg_lr);
  else if (key == "beta") real(c.beta);
  else if (key == "beta_budget") size(c.beta_budget);
  else if (key == "search_steps") size(c.search_steps);
  else if (key == "eval_seeds") size(c.eval_seeds);
  else if (key == "seed") c.seed = detail::parse_number<std::uint64_t>(key, v);
  else throw InputError(key, "config: unknown key '" + key + "'");
}

/// Range checks that do not depend on the data.
inline void validate(const RunConfig& c) {
  auto fail = [](const char* key, const std::string& why) { throw InputError(key, std::string("config: ") + key + " " + why); };
  if (!(c.beta > 0.0 && c.beta <= 1.0)) fail("beta", "must lie in (0, 1]");
  if (c.kappa < 0.0 || c.kappa > 1.0) fail("kappa", "must lie in [0, 1]");
  if (c.lambda_l1 < 0.0) fail("lambda_l1", "must be >= 0");
  if (c.batch_size < 1) fail("batch_size", "must be >= 1");
  if (c.image_size < 8 || c.image_size % 8 != 0) fail("image_size", "must be a positive multiple of 8");
  if (c.patch_size < 1 || c.image_size % c.patch_size != 0) fail("patch_size", "must divide image_size");
  if (c.token_dim < 1) fail("token_dim", "must be >= 1");
  if (c.base_width < 1) fail("base_width", "must be >= 1");
  if (c.seg_width < 1) fail("seg_width", "must be >= 1");
  if (c.eval_seeds < 1) fail("eval_seeds", "must be >= 1");
  if (c.n_train < 1 || c.n_val < 1 || c.n_train + c.n_val >= c.count) fail("n_train", "and n_val must leave a non-empty test split");
  if (!(c.lr > 0.0) || !(c.seg_lr > 0.0)) fail("lr", "must be > 0");
  if (c.beta1 < 0.0 || c.beta1 >= 1.0) fail("beta1", "must lie in [0, 1)");
  if (c.beta2 < 0.0 || c.beta2 >= 1.0) fail("beta2", "must lie in [0, 1)");
}

/// Applies `key = value` lines on top of `base`.
inline RunConfig parse_config(const std::string& text, RunConfig base = {}) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InputError(line, "config line " + std::to_string(lineno) + ": expected 'key = value', got '" + line + "'");
    }
    set_value(base, detail::trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  return base;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError(path, "cannot read config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

/// CAMOFA_SEED, when set, replaces the file's seed.
inline void apply_env(RunConfig& c) {
  if (const char* s = std::getenv("CAMOFA_SEED"); s && *s) c.seed = detail::parse_number<std::uint64_t>("CAMOFA_SEED", s);
}

/// Flags of the form key=value, applied last.
inline void apply_overrides(RunConfig& c, const std::vector<std::string>& pairs) {
  for (const auto& kv : pairs) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw InputError(kv, "--set expects key=value, got '" + kv + "'");
    set_value(c, detail::trim(kv.substr(0, eq)), kv.substr(eq + 1));
  }
}

/// Mirrors the config file format; parse_config(to_text(c)) == c.
inline std::string to_text(const RunConfig& c) {
  std::ostringstream o;
  o.precision(17);
  o << "data_dir = " << c.data_dir << "\ncheckpoint = " << c.checkpoint << "\nloss_log = " << c.loss_log
    << "\ntrace = " << c.trace << "\nreport = " << c.report << "\ncount = " << c.count << "\nn_train = " << c.n_train
    << "\nn_val = " << c.n_val << "\nkappa = " << c.kappa << "\nimage_size = " << c.image_size
    << "\nbase_width = " << c.base_width << "\npatch_size = " << c.patch_size << "\ntoken_dim = " << c.token_dim
    << "\nattn_eps = " << c.attn_eps << "\nlambda_l1 = " << c.lambda_l1 << "\nlr = " << c.lr
    << "\nbeta1 = " << c.beta1 << "\nbeta2 = " << c.beta2 << "\nbatch_size = " << c.batch_size
    << "\nsteps = " << c.steps << "\nseg_steps = " << c.seg_steps << "\nseg_width = " << c.seg_width
    << "\nseg_lr = " << c.seg_lr << "\nbeta = " << c.beta << "\nbeta_budget = " << c.beta_budget
    << "\nsearch_steps = " << c.search_steps << "\neval_seeds = " << c.eval_seeds << "\nseed = " << c.seed << "\n";
  return o.str();
}

inline GanArch gan_arch(const RunConfig& c) { return {3, c.base_width}; }

inline AttentionConfig attention_config(const RunConfig& c) { return {c.patch_size, c.token_dim, c.attn_eps}; }

inline TrainConfig gan_config(const RunConfig& c) {
  TrainConfig t;
  t.lambda_l1 = c.lambda_l1;
  t.adam = {c.lr, c.beta1, c.beta2, 1e-8};
  t.batch_size = c.batch_size;
  t.steps = c.steps;
  t.seed = c.seed;
  t.arch = gan_arch(c);
  return t;
}

inline SegTrainConfig seg_config(const RunConfig& c, std::size_t steps) {
  SegTrainConfig s;
  s.steps = steps;
  s.batch_size = c.batch_size;
  s.width = c.seg_width;
  s.adam = {c.seg_lr, 0.9, 0.999, 1e-8};
  s.augment_adam = {c.lr, c.beta1, c.beta2, 1e-8};
  s.seed = c.seed;
  return s;
}

inline SyntheticCamoConfig data_config(const RunConfig& c) {
  SyntheticCamoConfig d;
  d.image_size = c.image_size;
  d.kappa = c.kappa;
  d.count = c.count;
  d.seed = c.seed;
  return d;
}

}  // namespace camofa::cli
