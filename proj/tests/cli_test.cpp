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

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "camofa/cli.hpp"
#include "test_support.hpp"

namespace camofa::cli {
namespace {

namespace fs = std::filesystem;
using testing::random_image;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

struct Result {
  int code;
  std::string out, err;
};

Result invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "camofa");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("camofa_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    unsetenv("CAMOFA_SEED");
  }
  void TearDown() override {
    unsetenv("CAMOFA_SEED");
    fs::remove_all(dir_);
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  // Small 16x16 run: dataset, then a short GAN training.
  std::string write_small_config(std::size_t gan_steps = 4) {
    std::ostringstream c;
    c << "# tiny run\n"
      << "data_dir = " << path("data") << "\ncheckpoint = " << path("ck.cfck") << "\nloss_log = " << path("loss.jsonl")
      << "\ntrace = " << path("trace.json") << "\nreport = " << path("report.json") << "\n"
      << "image_size = 16\ncount = 24\nn_train = 12\nn_val = 6\nbase_width = 4\ntoken_dim = 8\n"
      << "steps = " << gan_steps << "\nseg_steps = 3\nsearch_steps = 2\nseg_width = 4\neval_seeds = 2\n";
    spit(path("run.cfg"), c.str());
    return path("run.cfg");
  }

  fs::path dir_;
};

TEST(Config, DefaultsRoundTripThroughText) {
  const RunConfig d;
  const RunConfig back = parse_config(to_text(d));
  EXPECT_EQ(to_text(back), to_text(d));
  EXPECT_EQ(d.batch_size, 8u);
  EXPECT_DOUBLE_EQ(d.lr, 1e-4);
  EXPECT_DOUBLE_EQ(d.beta1, 0.5);
  EXPECT_DOUBLE_EQ(d.beta2, 0.999);
}

TEST(Config, ParsesKeysCommentsAndBlankLines) {
  const RunConfig c = parse_config("# header\n\n  beta = 0.25  # fixed\nsteps=7\r\ndata_dir = some dir\n");
  EXPECT_DOUBLE_EQ(c.beta, 0.25);
  EXPECT_EQ(c.steps, 7u);
  EXPECT_EQ(c.data_dir, "some dir");
  EXPECT_EQ(c.patch_size, RunConfig{}.patch_size);
}

TEST(Config, UnknownKeyNamesTheKey) {
  try {
    parse_config("beta = 0.2\nlearning_rate = 3\n");
    FAIL() << "unknown key accepted";
  } catch (const InputError& e) {
    EXPECT_EQ(e.key(), "learning_rate");
  }
}

TEST(Config, BadValuesNameTheKey) {
  for (const auto& [text, key] : std::vector<std::pair<std::string, std::string>>{
           {"steps = ten", "steps"}, {"beta = 0.5x", "beta"}, {"no equals sign", "no equals sign"}}) {
    try {
      parse_config(text);
      FAIL() << text;
    } catch (const InputError& e) {
      EXPECT_EQ(e.key(), key);
    }
  }
  for (const auto& [text, key] : std::vector<std::pair<std::string, std::string>>{
           {"beta = 0", "beta"}, {"beta = 1.5", "beta"}, {"image_size = 12", "image_size"},
           {"patch_size = 5", "patch_size"}, {"kappa = -0.1", "kappa"}}) {
    try {
      validate(parse_config(text));
      FAIL() << text;
    } catch (const InputError& e) {
      EXPECT_EQ(e.key(), key);
    }
  }
}

TEST_F(TempDir, MissingConfigFileNamesThePath) {
  const auto r = invoke({"train-gan", "--config", path("nope.cfg")});
  EXPECT_EQ(r.code, kExitInput);
  EXPECT_NE(r.err.find(path("nope.cfg")), std::string::npos);
}

TEST_F(TempDir, SeedPrecedenceFlagOverEnvOverFile) {
  spit(path("c.cfg"), "seed = 5\n");
  Common common{path("c.cfg"), {}};
  EXPECT_EQ(resolve_config(common).seed, 5u);
  setenv("CAMOFA_SEED", "9", 1);
  EXPECT_EQ(resolve_config(common).seed, 9u);
  common.overrides = {"seed=11"};
  EXPECT_EQ(resolve_config(common).seed, 11u);
  EXPECT_EQ(resolve_config(Common{}).seed, 9u);
  setenv("CAMOFA_SEED", "abc", 1);
  EXPECT_THROW(resolve_config(Common{}), InputError);
}

TEST(Checkpoint, BitwiseRoundTrip) {
  Rng rng(3);
  Checkpoint ck;
  Tensor<float> a({2, 3, 4});
  for (auto& v : a.data()) v = static_cast<float>(rng.normal());
  a[0] = -0.0f;
  a[1] = std::numeric_limits<float>::denorm_min();
  Tensor<double> b({5});
  for (auto& v : b.data()) v = rng.normal();
  ck.add("a", a);
  ck.add("b", b);
  ck.add("one", Tensor<float>({1}, 7.5f));
  const Checkpoint back = Checkpoint::decode(ck.encode());
  EXPECT_EQ(back.encode(), ck.encode());
  const auto a2 = back.get<float>("a");
  ASSERT_EQ(a2.shape(), a.shape());
  EXPECT_EQ(std::memcmp(a2.data().data(), a.data().data(), a.size() * sizeof(float)), 0);
  const auto b2 = back.get<double>("b");
  EXPECT_EQ(std::memcmp(b2.data().data(), b.data().data(), b.size() * sizeof(double)), 0);
}

TEST(Checkpoint, HeaderLayout) {
  Checkpoint ck;
  ck.add("x", Tensor<float>({3}, 1.0f));
  ck.add("y", Tensor<double>({2}, 2.0));
  const std::string bytes = ck.encode();
  ASSERT_EQ(bytes.substr(0, 4), "CFCK");
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  EXPECT_EQ(le::get_u32(p + 4), 1u);
  const std::size_t header_len = le::get_u32(p + 8);
  const auto header = nlohmann::json::parse(bytes.substr(12, header_len));
  EXPECT_EQ(header["tensors"][0]["byte_offset"], 0);
  EXPECT_EQ(header["tensors"][1]["byte_offset"], 12);
  EXPECT_EQ(header["tensors"][1]["dtype"], "f64");
  EXPECT_EQ(bytes.size(), 12 + header_len + 12 + 16);
}

TEST(Checkpoint, StructuredErrors) {
  Checkpoint ck;
  ck.add("x", Tensor<float>({4}, 1.0f));
  const std::string good = ck.encode();
  auto field_of = [](const std::string& bytes) {
    try {
      Checkpoint::decode(bytes);
    } catch (const CheckpointError& e) {
      return std::make_pair(e.field(), std::string(e.what()));
    }
    return std::make_pair(CheckpointError::Field::tensor, std::string("no error"));
  };
  std::string bad = good;
  bad[0] = 'X';
  EXPECT_EQ(field_of(bad).first, CheckpointError::Field::magic);
  bad = good;
  bad[4] = 2;
  EXPECT_EQ(field_of(bad).first, CheckpointError::Field::version);
  const auto [field, msg] = field_of(good.substr(0, good.size() - 3));
  EXPECT_EQ(field, CheckpointError::Field::payload_length);
  EXPECT_NE(msg.find("expected 16 bytes, got 13"), std::string::npos) << msg;
  EXPECT_EQ(field_of(good + "zz").first, CheckpointError::Field::payload_length);
  EXPECT_EQ(field_of(good.substr(0, 14)).first, CheckpointError::Field::header);
}

TEST(Checkpoint, LoadIntoChecksShape) {
  Rng rng(1);
  auto gen = GeneratorParams<float>::init({3, 4}, rng);
  Checkpoint ck;
  ck.add_all<float>(std::as_const(gen).parameters());
  auto other = GeneratorParams<float>::init({3, 4}, rng);
  ck.load_into(other.parameters());
  const auto a = std::as_const(gen).parameters();
  const auto b = std::as_const(other).parameters();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto x = a[i]->value.data(), y = b[i]->value.data();
    EXPECT_TRUE(std::equal(x.begin(), x.end(), y.begin(), y.end())) << a[i]->name;
  }
  auto wider = GeneratorParams<float>::init({3, 8}, rng);
  EXPECT_THROW(ck.load_into(wider.parameters()), CheckpointError);
}

TEST_F(TempDir, PngRoundTripWithinOneLevel) {
  Rng rng(4);
  const Image img = random_image(9, 13, 3, rng);
  write_png(path("a.png"), img);
  const Image back = read_png(path("a.png"));
  ASSERT_EQ(back.height, 9u);
  ASSERT_EQ(back.width, 13u);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    EXPECT_LE(std::abs(back.pixels[i] - img.pixels[i]), 0.5f / 255.0f + 1e-6f);
    EXPECT_EQ(to_byte(back.pixels[i]), to_byte(img.pixels[i]));
  }
  spit(path("junk.png"), "not a png");
  EXPECT_THROW(read_png(path("junk.png")), ImageIoError);
}

TEST_F(TempDir, DatasetRoundTrip) {
  SyntheticCamoConfig cfg;
  cfg.image_size = 16;
  cfg.count = 10;
  cfg.seed = 2;
  const auto samples = generate_dataset(cfg);
  write_dataset(path("d"), samples, cfg, split_indices(10, 6, 2));
  EXPECT_TRUE(fs::exists(path("d/img_00009.png")));
  EXPECT_TRUE(fs::exists(path("d/mask_00000.png")));
  const DiskDataset back = read_dataset(path("d"));
  ASSERT_EQ(back.samples.size(), 10u);
  EXPECT_EQ(back.split.test, (std::vector<std::size_t>{8, 9}));
  EXPECT_EQ(back.seed, 2u);
  for (std::size_t i = 0; i < 10; ++i) {
    EXPECT_EQ(back.samples[i].mask, samples[i].mask);
    for (std::size_t j = 0; j < samples[i].image.pixels.size(); ++j)
      ASSERT_LE(std::abs(back.samples[i].image.pixels[j] - samples[i].image.pixels[j]), 0.5f / 255.0f + 1e-6f);
  }
  EXPECT_THROW(read_dataset(path("missing")), InputError);
}

TEST_F(TempDir, UsageErrorsExitTwo) {
  EXPECT_EQ(invoke({}).code, kExitInput);
  EXPECT_EQ(invoke({"frobnicate"}).code, kExitInput);
  EXPECT_EQ(invoke({"augment", "--input", path("x")}).code, kExitInput);
  EXPECT_EQ(invoke({"eval", "--set", "bogus=1"}).code, kExitInput);
  EXPECT_EQ(invoke({"--help"}).code, kExitOk);
}

TEST_F(TempDir, EndToEndCommands) {
  const std::string cfg = write_small_config();
  ASSERT_EQ(invoke({"make-dataset", "-c", cfg}).code, kExitOk);

  auto r = invoke({"train-gan", "-c", cfg});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  ASSERT_TRUE(fs::exists(path("ck.cfck")));
  const std::string first_ck = slurp(path("ck.cfck"));
  std::istringstream log(slurp(path("loss.jsonl")));
  std::string line;
  std::size_t lines = 0;
  while (std::getline(log, line)) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_EQ(j["step"], lines + 1);
    EXPECT_NEAR(j["g_total"].get<double>(), j["g_adv_loss"].get<double>() + 100.0 * j["g_l1_loss"].get<double>(),
                1e-4 * std::abs(j["g_total"].get<double>()));
    ++lines;
  }
  EXPECT_EQ(lines, 4u);
  ASSERT_EQ(invoke({"train-gan", "-c", cfg}).code, kExitOk);
  EXPECT_EQ(slurp(path("ck.cfck")), first_ck);
  const Checkpoint ck = Checkpoint::load(path("ck.cfck"));
  EXPECT_TRUE(ck.contains("attn.query"));
  EXPECT_TRUE(ck.contains("attn.out"));

  // augment: N inputs, N outputs, same basenames; a junk file is skipped.
  fs::create_directories(path("in"));
  for (std::size_t i : {0, 1, 2}) fs::copy_file(path("data/" + indexed_name("img", i)), path("in/" + indexed_name("x", i)));
  r = invoke({"augment", "-c", cfg, "--input", path("in"), "--output", path("out"), "--dump-spectra"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  for (std::size_t i : {0, 1, 2}) EXPECT_TRUE(fs::exists(path("out/" + indexed_name("x", i))));
  EXPECT_TRUE(fs::exists(path("out/spectra/x_00000.output.c2.cfsp")));
  EXPECT_EQ(invoke({"augment", "-c", cfg, "--input", path("in"), "--output", path("in")}).code, kExitInput);
  spit(path("in/zz.png"), "garbage");
  r = invoke({"augment", "-c", cfg, "--input", path("in"), "--output", path("out2")});
  EXPECT_EQ(r.code, kExitSkipped);
  EXPECT_NE(r.err.find("zz.png"), std::string::npos);
  EXPECT_TRUE(fs::exists(path("out2/x_00002.png")));

  // search-beta: exhaustive grid gives 99 trace entries.
  r = invoke({"search-beta", "-c", cfg, "--exhaustive", "--set", "n_val=6"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto trace = nlohmann::json::parse(slurp(path("trace.json")));
  EXPECT_EQ(trace.size(), 99u);
  EXPECT_NE(r.out.find("beta_star=0."), std::string::npos);
  EXPECT_EQ(invoke({"search-beta", "-c", cfg, "--budget", "2"}).code, kExitInput);
  r = invoke({"search-beta", "-c", cfg, "--budget", "4"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const std::string trace4 = slurp(path("trace.json"));
  EXPECT_EQ(nlohmann::json::parse(trace4).size(), 4u);
  ASSERT_EQ(invoke({"search-beta", "-c", cfg, "--budget", "4"}).code, kExitOk);
  EXPECT_EQ(slurp(path("trace.json")), trace4);

  // eval: report schema and determinism.
  r = invoke({"eval", "-c", cfg});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const std::string report_text = slurp(path("report.json"));
  const auto report = nlohmann::json::parse(report_text);
  for (const char* k : {"baseline", "augmented", "delta"}) {
    ASSERT_TRUE(report[k].contains("mae")) << k;
    ASSERT_TRUE(report[k].contains("iou")) << k;
  }
  EXPECT_DOUBLE_EQ(report["delta"]["mae"].get<double>(),
                   report["augmented"]["mae"].get<double>() - report["baseline"]["mae"].get<double>());
  EXPECT_EQ(report["seeds"], nlohmann::json({0, 1}));
  ASSERT_EQ(invoke({"eval", "-c", cfg}).code, kExitOk);
  EXPECT_EQ(slurp(path("report.json")), report_text);
  EXPECT_EQ(invoke({"eval", "-c", cfg, "--set", "checkpoint=" + path("absent.cfck")}).code, kExitInput);
}

TEST_F(TempDir, AugmentBetaOneMatchesBasicSwap) {
  const std::string cfg = write_small_config(1);
  ASSERT_EQ(invoke({"make-dataset", "-c", cfg}).code, kExitOk);
  ASSERT_EQ(invoke({"train-gan", "-c", cfg}).code, kExitOk);
  fs::create_directories(path("in"));
  fs::copy_file(path("data/img_00003.png"), path("in/a.png"));
  ASSERT_EQ(invoke({"augment", "-c", cfg, "--input", path("in"), "--output", path("out"), "--beta", "1.0"}).code,
            kExitOk);

  const RunConfig rc = resolve_config(Common{cfg, {}});
  const auto pipeline = load_pipeline(rc);
  const Image input = read_png(path("in/a.png"));
  const auto noise = inference_noise<float>(16, 16, rc.seed, 0);
  const Image expected = basic_swap(input, reference_image(input, pipeline, noise));
  const Image in_memory = augment(input, pipeline, 1.0, noise);
  const Image written = read_png(path("out/a.png"));
  for (std::size_t i = 0; i < written.pixels.size(); ++i) {
    EXPECT_LE(std::abs(written.pixels[i] - in_memory.pixels[i]), 1.0f / 255.0f);
    EXPECT_LE(std::abs(in_memory.pixels[i] - expected.pixels[i]), 1e-5f);
  }
}

TEST_F(TempDir, InspectSpectrumWritesDumps) {
  Rng rng(8);
  write_png(path("p.png"), random_image(8, 6, 3, rng));
  const auto r = invoke({"inspect-spectrum", path("p.png"), "--dump", path("spec")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto summary = nlohmann::json::parse(r.out);
  EXPECT_EQ(summary["height"], 8);
  EXPECT_EQ(summary["dumps"].size(), 3u);
  const Spectrum spec = fft2(read_png(path("p.png")));
  const auto channel = read_spectrum_channel(path("spec/p.c1.cfsp")).channels.at(0);
  ASSERT_EQ(channel.size(), spec.channels[1].size());
  for (std::size_t i = 0; i < channel.size(); ++i) EXPECT_EQ(channel[i], spec.channels[1][i]);
  EXPECT_EQ(invoke({"inspect-spectrum", path("missing.png")}).code, kExitInput);
}

}  // namespace
}  // namespace camofa::cli
