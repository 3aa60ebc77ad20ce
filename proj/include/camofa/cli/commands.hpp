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
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "camofa/betasearch.hpp"
#include "camofa/cli/checkpoint.hpp"
#include "camofa/cli/config.hpp"
#include "camofa/cli/dataset_io.hpp"
#include "camofa/cli/png_io.hpp"
#include "camofa/pipeline.hpp"

// Subcommands behind the `camofa` executable. Exit codes: 0 success,
// 2 configuration or input error, 3 numerical failure, 4 some inputs skipped.

namespace camofa::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr int kExitSkipped = 4;

namespace fs = std::filesystem;

/// Options shared by every subcommand.
struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
};

inline RunConfig resolve_config(const Common& common) {
  RunConfig cfg = common.config_path.empty() ? RunConfig{} : load_config(common.config_path);
  apply_env(cfg);
  apply_overrides(cfg, common.overrides);
  validate(cfg);
  return cfg;
}

inline void write_text(const std::string& path, const std::string& text) {
  if (const auto parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError(path, "cannot write " + path);
  out << text;
}

inline AugmentPipeline<float> load_pipeline(const RunConfig& cfg) {
  if (!fs::exists(cfg.checkpoint)) throw InputError("checkpoint", "checkpoint not found: " + cfg.checkpoint);
  const Checkpoint ck = Checkpoint::load(cfg.checkpoint);
  Rng rng(0);
  auto pipeline = AugmentPipeline<float>::init(gan_arch(cfg), attention_config(cfg), cfg.beta, rng);
  ck.load_into(pipeline.parameters());
  return pipeline;
}

inline void require_image_size(const DiskDataset& data, const RunConfig& cfg) {
  const Image& first = data.samples.front().image;
  if (first.height != cfg.image_size || first.width != cfg.image_size) {
    throw InputError("image_size", "dataset images are " + first.dims_string() + " but image_size is " +
                                       std::to_string(cfg.image_size));
  }
}

inline int cmd_make_dataset(const RunConfig& cfg, std::ostream& out) {
  const auto samples = generate_dataset(data_config(cfg));
  const Split split = split_indices(samples.size(), cfg.n_train, cfg.n_val);
  write_dataset(cfg.data_dir, samples, data_config(cfg), split);
  out << "wrote " << samples.size() << " samples to " << cfg.data_dir << "\n";
  return kExitOk;
}

inline int cmd_train_gan(const RunConfig& cfg, std::ostream& out) {
  const DiskDataset data = read_dataset(cfg.data_dir);
  require_image_size(data, cfg);
  const auto images = images_of(data.samples, data.split.train);
  std::string log;
  auto trained = train_gan<float>(images, gan_config(cfg), [&](const LossReport& r) {
    log += nlohmann::json{{"step", r.step},
                          {"d_loss", r.d_loss},
                          {"g_adv_loss", r.g_adv_loss},
                          {"g_l1_loss", r.g_l1_loss},
                          {"g_total", r.g_total}}
               .dump() +
           "\n";
  });
  // Attention weights start from the seed; eval fine-tunes them jointly.
  Rng attn_rng = Rng(cfg.seed).fork(4);
  const auto attention = AttentionParams<float>::init(3, attention_config(cfg), attn_rng);
  Checkpoint ck;
  ck.add_all<float>(std::as_const(trained.generator).parameters());
  ck.add_all<float>(std::as_const(trained.discriminator).parameters());
  for (auto* p : const_cast<AttentionParams<float>&>(attention).parameters()) ck.add(p->name, p->value);
  if (const auto parent = fs::path(cfg.checkpoint).parent_path(); !parent.empty()) fs::create_directories(parent);
  ck.save(cfg.checkpoint);
  write_text(cfg.loss_log, log);
  const auto& last = trained.reports.back();
  out << "trained " << last.step << " steps, final g_l1 " << last.g_l1_loss << ", checkpoint " << cfg.checkpoint
      << "\n";
  return kExitOk;
}

struct AugmentArgs {
  std::string input_dir, output_dir;
  bool dump_spectra = false;
};

inline std::vector<fs::path> list_pngs(const std::string& dir) {
  if (!fs::is_directory(dir)) throw InputError(dir, "input directory not found: " + dir);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".png") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

inline int cmd_augment(const RunConfig& cfg, const AugmentArgs& args, std::ostream& out, std::ostream& err) {
  const auto files = list_pngs(args.input_dir);
  fs::create_directories(args.output_dir);
  if (fs::equivalent(args.input_dir, args.output_dir)) {
    throw InputError("output", "output directory must differ from the input directory");
  }
  const auto pipeline = load_pipeline(cfg);
  const auto& attn = pipeline.attention_config;
  std::size_t written = 0, skipped = 0;
  for (std::size_t i = 0; i < files.size(); ++i) {
    Image img;
    try {
      img = read_png(files[i].string());
    } catch (const ImageIoError& e) {
      err << "warning: skipping " << files[i].string() << ": " << e.what() << "\n";
      ++skipped;
      continue;
    }
    if (img.height % 8 != 0 || img.width % 8 != 0 || img.height % attn.patch_size != 0 ||
        img.width % attn.patch_size != 0) {
      err << "warning: skipping " << files[i].string() << ": size " << img.dims_string()
          << " is not a multiple of 8 and of patch_size\n";
      ++skipped;
      continue;
    }
    const auto noise = inference_noise<float>(img.height, img.width, cfg.seed, i);
    write_png((fs::path(args.output_dir) / files[i].filename()).string(), augment(img, pipeline, cfg.beta, noise));
    ++written;
    if (args.dump_spectra) {
      const Image reference = reference_image(img, pipeline, noise);
      const fs::path dir = fs::path(args.output_dir) / "spectra";
      fs::create_directories(dir);
      const std::string stem = files[i].stem().string();
      const std::pair<const char*, Spectrum> dumps[] = {{"input", fft2(img)},
                                                         {"reference", fft2(reference)},
                                                         {"output", hybrid_swap_spectrum(img, reference, cfg.beta)}};
      for (const auto& [tag, spec] : dumps)
        for (std::size_t c = 0; c < spec.channel_count(); ++c)
          write_spectrum_channel((dir / (stem + "." + tag + ".c" + std::to_string(c) + ".cfsp")).string(), spec, c);
    }
  }
  out << "augmented " << written << " of " << files.size() << " images at beta " << cfg.beta << "\n";
  return skipped ? kExitSkipped : kExitOk;
}

inline int cmd_search_beta(const RunConfig& cfg, bool exhaustive, std::ostream& out) {
  if (!exhaustive && cfg.beta_budget < 3) {
    throw InputError("beta_budget", "beta_budget must be >= 3, got " + std::to_string(cfg.beta_budget));
  }
  const DiskDataset data = read_dataset(cfg.data_dir);
  require_image_size(data, cfg);
  const auto pipeline = load_pipeline(cfg);
  const DownstreamObjective<float> objective(pipeline, subset(data.samples, data.split.train),
                                             subset(data.samples, data.split.val), seg_config(cfg, cfg.search_steps));
  const SearchResult r = exhaustive ? grid_search(objective) : bo_search(objective, cfg.beta_budget, cfg.seed);
  nlohmann::json trace = nlohmann::json::array();
  for (const auto& e : r.trace) trace.push_back({{"beta", e.beta}, {"score", e.score}, {"order", e.order}});
  write_text(cfg.trace, trace.dump(2) + "\n");
  char line[64];
  std::snprintf(line, sizeof line, "beta_star=%.2f", r.beta_star);
  out << line << " score=" << r.score_star << " evaluations=" << r.trace.size() << "\n";
  return kExitOk;
}

inline int cmd_eval(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const auto pipeline = load_pipeline(cfg);
  const DiskDataset data = read_dataset(cfg.data_dir);
  require_image_size(data, cfg);
  const SplitData split{subset(data.samples, data.split.train), subset(data.samples, data.split.val),
                        subset(data.samples, data.split.test)};
  if (split.test.empty()) throw InputError("data_dir", "dataset has an empty test split");
  CompareConfig cc;
  cc.segmenter = seg_config(cfg, cfg.seg_steps);
  cc.attention = attention_config(cfg);
  cc.beta = cfg.beta;
  cc.seeds.clear();
  for (std::size_t i = 0; i < cfg.eval_seeds; ++i) cc.seeds.push_back(cfg.seed + i);
  const auto report = compare_runs<float>(cc, &pipeline, [&](const std::string& s) { err << s << "\n"; }, &split);
  write_text(cfg.report, report_json(report).dump(2) + "\n");
  out << "baseline mae " << report.baseline.mae << ", augmented mae " << report.augmented.mae << ", report "
      << cfg.report << "\n";
  return kExitOk;
}

inline int cmd_inspect_spectrum(const std::string& png, const std::string& out_dir, std::ostream& out) {
  Image img;
  try {
    img = read_png(png);
  } catch (const ImageIoError& e) {
    throw InputError(png, e.what());
  }
  const Spectrum spec = fft2(img);
  const auto [amp, phase] = decompose(spec);
  const std::size_t dc = (img.height / 2) * img.width + img.width / 2;
  nlohmann::json summary = {{"file", png}, {"height", img.height}, {"width", img.width}, {"channels", img.channels}};
  for (std::size_t c = 0; c < img.channels; ++c) {
    double energy = 0.0;
    for (double a : amp.channels[c]) energy += a * a;
    summary["dc"].push_back(spec.channels[c][dc].real());
    summary["energy"].push_back(energy / static_cast<double>(img.height * img.width));
  }
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    const std::string stem = fs::path(png).stem().string();
    for (std::size_t c = 0; c < img.channels; ++c) {
      const auto path = (fs::path(out_dir) / (stem + ".c" + std::to_string(c) + ".cfsp")).string();
      write_spectrum_channel(path, spec, c);
      summary["dumps"].push_back(path);
    }
  }
  out << summary.dump() << "\n";
  return kExitOk;
}

/// Parses argv and dispatches. Never throws.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"camofa: learnable Fourier-domain augmentation at desk scale", "camofa"};
  app.require_subcommand(1);
  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", common.config_path, "key = value config file");
    sub->add_option("--set", common.overrides, "override a config key (key=value), repeatable");
  };
  std::uint64_t seed = 0;
  double beta = 0.0;
  std::size_t budget = 0;
  auto add_seed = [&](CLI::App* sub) { sub->add_option("--seed", seed, "run seed (overrides config and CAMOFA_SEED)"); };

  auto* make = app.add_subcommand("make-dataset", "generate the synthetic camouflage dataset");
  add_common(make);
  add_seed(make);
  auto* train = app.add_subcommand("train-gan", "train the conditional generator and discriminator");
  add_common(train);
  add_seed(train);
  AugmentArgs aug_args;
  auto* aug = app.add_subcommand("augment", "augment every PNG in a directory");
  add_common(aug);
  add_seed(aug);
  aug->add_option("--input", aug_args.input_dir, "input directory")->required();
  aug->add_option("--output", aug_args.output_dir, "output directory")->required();
  aug->add_option("--beta", beta, "hybrid swap fraction in (0, 1]");
  aug->add_flag("--dump-spectra", aug_args.dump_spectra, "also write CFSP dumps of input, reference, output");
  bool exhaustive = false;
  auto* search = app.add_subcommand("search-beta", "optimize beta against the downstream objective");
  add_common(search);
  add_seed(search);
  search->add_flag("--exhaustive", exhaustive, "evaluate the whole grid instead of Bayesian search");
  search->add_option("--budget", budget, "number of objective evaluations");
  auto* eval = app.add_subcommand("eval", "baseline vs augmented segmenter comparison");
  add_common(eval);
  add_seed(eval);
  eval->add_option("--beta", beta, "hybrid swap fraction in (0, 1]");
  std::string png, dump_dir;
  auto* inspect = app.add_subcommand("inspect-spectrum", "print and dump the spectrum of one PNG");
  inspect->add_option("image", png, "PNG file")->required();
  inspect->add_option("--dump", dump_dir, "directory for per-channel CFSP files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitInput;
  }

  try {
    if (inspect->parsed()) return cmd_inspect_spectrum(png, dump_dir, out);
    CLI::App* sub = app.get_subcommands().front();
    if (sub->count("--seed")) common.overrides.push_back("seed=" + std::to_string(seed));
    if (sub->get_option_no_throw("--beta") && sub->count("--beta")) {
      char buf[40];
      std::snprintf(buf, sizeof buf, "beta=%.17g", beta);
      common.overrides.push_back(buf);
    }
    if (sub->get_option_no_throw("--budget") && sub->count("--budget")) {
      common.overrides.push_back("beta_budget=" + std::to_string(budget));
    }
    const RunConfig cfg = resolve_config(common);
    if (make->parsed()) return cmd_make_dataset(cfg, out);
    if (train->parsed()) return cmd_train_gan(cfg, out);
    if (aug->parsed()) return cmd_augment(cfg, aug_args, out, err);
    if (search->parsed()) return cmd_search_beta(cfg, exhaustive, out);
    if (eval->parsed()) return cmd_eval(cfg, out, err);
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitInput;
}

}  // namespace camofa::cli
