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
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "camofa/betasearch.hpp"
#include "camofa/gan.hpp"
#include "camofa/pipeline/augment.hpp"
#include "camofa/pipeline/dataset.hpp"
#include "camofa/pipeline/segmenter.hpp"

namespace camofa {

struct CompareConfig {
  SyntheticCamoConfig data{};  // data.seed is replaced by each run seed
  std::size_t n_train = 256;
  std::size_t n_val = 64;
  std::size_t n_test = 64;
  TrainConfig gan{};           // gan.seed is replaced by each run seed
  AttentionConfig attention{8, 64, 1e-5};
  SegTrainConfig segmenter{};  // segmenter.seed is replaced by each run seed
  double beta = 0.1;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
};

struct SeedMetrics {
  std::uint64_t seed = 0;
  Metrics metrics;
};

struct CompareReport {
  double beta = 0.0;
  std::vector<std::uint64_t> seeds;
  std::vector<SeedMetrics> baseline_runs, augmented_runs;
  Metrics baseline, augmented, delta;  // medians over seeds; delta = augmented - baseline
};

inline double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median of empty list");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline Metrics median_metrics(const std::vector<SeedMetrics>& runs) {
  std::vector<double> mae, iou;
  for (const auto& r : runs) {
    mae.push_back(r.metrics.mae);
    iou.push_back(r.metrics.iou);
  }
  return {median(mae), median(iou)};
}

/// Dataset for one run seed, split into train / val / test.
struct SplitData {
  std::vector<Sample> train, val, test;
};

inline SplitData make_split_data(const CompareConfig& cfg, std::uint64_t seed) {
  SyntheticCamoConfig data = cfg.data;
  data.seed = seed;
  data.count = cfg.n_train + cfg.n_val + cfg.n_test;
  const auto all = generate_dataset(data);
  const auto split = split_indices(all.size(), cfg.n_train, cfg.n_val);
  return {subset(all, split.train), subset(all, split.val), subset(all, split.test)};
}

/// Trains the augmentation front end for one seed: the GAN on the training
/// images, plus freshly initialized attention weights.
template <class T>
AugmentPipeline<T> pretrain_pipeline(const std::vector<Sample>& train, const CompareConfig& cfg,
                                     std::uint64_t seed, double beta) {
  TrainConfig gan = cfg.gan;
  gan.seed = seed;
  std::vector<Image> images;
  for (const auto& s : train) images.push_back(s.image);
  auto trained = train_gan<T>(images, gan);
  Rng rng(seed ^ 0xC0FFEEULL);
  return {std::move(trained.generator),
          AttentionParams<T>::init(train.front().image.channels, cfg.attention, rng), cfg.attention,
          beta};
}

/// Baseline (no augmentation) and augmented segmenters on identical data and
/// seeds. The augmented model keeps its learned front end at test time.
/// With `pretrained` set, each seed starts from a copy of it instead of
/// training a GAN. With `fixed` set, every seed uses that data instead of a
/// freshly generated set.
template <class T>
CompareReport compare_runs(const CompareConfig& cfg, const AugmentPipeline<T>* pretrained = nullptr,
                           const std::function<void(const std::string&)>& log = {},
                           const SplitData* fixed = nullptr) {
  CompareReport report;
  report.beta = cfg.beta;
  report.seeds = cfg.seeds;
  for (std::uint64_t seed : cfg.seeds) {
    const SplitData data = fixed ? *fixed : make_split_data(cfg, seed);
    SegTrainConfig seg = cfg.segmenter;
    seg.seed = seed;

    const auto baseline = train_segmenter<T>(data.train, seg);
    report.baseline_runs.push_back({seed, evaluate(baseline.params, data.test)});

    AugmentPipeline<T> pipeline =
        pretrained ? *pretrained : pretrain_pipeline<T>(data.train, cfg, seed, cfg.beta);
    pipeline.beta = cfg.beta;
    const auto augmented = train_segmenter<T>(data.train, seg, &pipeline);
    const auto test_aug = augment_samples(data.test, pipeline, cfg.beta, seed);
    report.augmented_runs.push_back({seed, evaluate(augmented.params, test_aug)});
    if (log) {
      log("seed " + std::to_string(seed) + ": baseline mae " +
          std::to_string(report.baseline_runs.back().metrics.mae) + ", augmented mae " +
          std::to_string(report.augmented_runs.back().metrics.mae));
    }
  }
  report.baseline = median_metrics(report.baseline_runs);
  report.augmented = median_metrics(report.augmented_runs);
  report.delta = {report.augmented.mae - report.baseline.mae, report.augmented.iou - report.baseline.iou};
  return report;
}

inline nlohmann::json metrics_json(const Metrics& m) { return {{"mae", m.mae}, {"iou", m.iou}}; }

inline nlohmann::json report_json(const CompareReport& r) {
  auto runs = [](const std::vector<SeedMetrics>& v) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& s : v) a.push_back({{"seed", s.seed}, {"mae", s.metrics.mae}, {"iou", s.metrics.iou}});
    return a;
  };
  return {{"baseline", metrics_json(r.baseline)},
          {"augmented", metrics_json(r.augmented)},
          {"delta", metrics_json(r.delta)},
          {"seeds", r.seeds},
          {"beta", r.beta},
          {"runs", {{{"name", "baseline"}, {"per_seed", runs(r.baseline_runs)}},
                    {{"name", "augmented"}, {"per_seed", runs(r.augmented_runs)}}}}};
}

/// beta -> -(validation MAE) of a segmenter briefly trained on data passed
/// through the frozen pipeline at that beta. Deterministic for a fixed seed.
template <class T>
class DownstreamObjective {
 public:
  DownstreamObjective(const AugmentPipeline<T>& pipeline, std::vector<Sample> train,
                      std::vector<Sample> val, SegTrainConfig seg, bool disable_augmentation = false)
      : pipeline_(pipeline), train_(std::move(train)), val_(std::move(val)), seg_(seg),
        disabled_(disable_augmentation) {}

  double operator()(double beta) const {
    AugmentOptions options;
    options.reference_is_input = disabled_;
    const auto train = augment_samples(train_, pipeline_, beta, seg_.seed, options);
    const auto val = augment_samples(val_, pipeline_, beta, seg_.seed + 1, options);
    const auto run = train_segmenter<T>(train, seg_);
    return -evaluate(run.params, val).mae;
  }

  /// Same segmenter training on the untouched images.
  double baseline() const {
    const auto run = train_segmenter<T>(train_, seg_);
    return -evaluate(run.params, val_).mae;
  }

 private:
  AugmentPipeline<T> pipeline_;
  std::vector<Sample> train_, val_;
  SegTrainConfig seg_;
  bool disabled_;
};

}  // namespace camofa
