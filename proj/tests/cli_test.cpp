// Copyright 2026 The hearshape Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Runs the hearshape binary end to end.

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "hearshape/dsp/wav.hpp"
#include "hearshape/service/server.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Result {
  int code = -1;
  std::string out, err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("hearshape_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  // `env` is prepended verbatim, e.g. "HEARSHAPE_OUT=x".
  Result run(const std::string& args, const std::string& env = "") {
    const auto out = dir_ / "stdout.txt", err = dir_ / "stderr.txt";
    const std::string cmd = "cd '" + dir_.string() + "' && env -u HEARSHAPE_OUT " + env + " '" HEARSHAPE_CLI "' " +
                            args + " > '" + out.string() + "' 2> '" + err.string() + "'";
    const int status = std::system(cmd.c_str());
    Result r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
  }

  void write(const std::string& name, const std::string& text) { std::ofstream(dir_ / name) << text; }

  fs::path dir_;
};

TEST_F(Cli, SynthWritesFullLengthWav) {
  const Result r = run("synth --omega-hz 100 --tau 0.5 --p 0.01 --D 0.01 --alpha 0.8 --out drum.wav");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto audio = hearshape::wav::read(dir_ / "drum.wav");
  EXPECT_EQ(audio.samples.size(), 1u << 15);
  EXPECT_EQ(audio.sample_rate, 22050.0);
  EXPECT_EQ(json::parse(r.out).at("samples"), 1u << 15);
}

TEST_F(Cli, SynthMatchesServiceBytes) {
  ASSERT_EQ(run("synth --omega-hz 180 --tau 0.4 --strike 0.3 0.6 --out a.wav").code, 0);
  const hearshape::service::ServiceConfig svc;
  hearshape::StrikeConfig strike = svc.strike;
  strike.strike_pos = {0.3, 0.6};
  const auto theta = hearshape::ShapeVector::from_hz(180, 0.4, 0.01, 0.01, 0.8);
  EXPECT_EQ(slurp(dir_ / "a.wav"), hearshape::service::render_wav(theta, strike, svc.synth));
}

TEST_F(Cli, SynthIsDeterministic) {
  ASSERT_EQ(run("synth --omega-hz 321 --out a.wav").code, 0);
  ASSERT_EQ(run("synth --omega-hz 321 --out b.wav").code, 0);
  EXPECT_EQ(slurp(dir_ / "a.wav"), slurp(dir_ / "b.wav"));
}

TEST_F(Cli, ExitCodes) {
  const Result usage = run("synth --no-such-flag");
  EXPECT_EQ(usage.code, 2);
  EXPECT_EQ(json::parse(usage.err).at("error"), "UsageError");
  EXPECT_EQ(run("").code, 2);

  const Result invalid = run("synth --tau -1");
  EXPECT_EQ(invalid.code, 3);
  const json e = json::parse(invalid.err);
  EXPECT_EQ(e.at("error"), "InvalidArgument");
  EXPECT_EQ(e.at("field"), "tau");
  EXPECT_EQ(e.at("exit_code"), 3);

  const Result membrane = run("synth --strike 0 0.5");
  EXPECT_EQ(membrane.code, 3);
  EXPECT_EQ(json::parse(membrane.err).at("field"), "strike_pos[0]");

  const Result runtime = run("eval --data missing");
  EXPECT_EQ(runtime.code, 1);
  EXPECT_EQ(json::parse(runtime.err).at("error"), "IoError");

  EXPECT_EQ(run("--help").code, 0);
  EXPECT_EQ(run("synth --help").code, 0);
}

TEST_F(Cli, JsonAndTomlConfigWithFlagOverride) {
  write("c.json", R"({"synth": {"omega_hz": 200, "tau": 0.3, "out": "cfg.wav"}})");
  Result r = run("--config c.json synth --tau 0.2");
  ASSERT_EQ(r.code, 0) << r.err;
  json s = json::parse(r.out);
  EXPECT_DOUBLE_EQ(s["theta"]["omega_hz"].get<double>(), 200.0);
  EXPECT_DOUBLE_EQ(s["theta"]["tau"].get<double>(), 0.2);
  EXPECT_TRUE(fs::exists(dir_ / "cfg.wav"));

  write("c.toml", "[synth]\nomega-hz = 150\nstrike = [0.4, 0.4]\nout = \"toml.wav\"\n");
  r = run("--config c.toml synth");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_DOUBLE_EQ(json::parse(r.out)["theta"]["omega_hz"].get<double>(), 150.0);
  EXPECT_TRUE(fs::exists(dir_ / "toml.wav"));
}

TEST_F(Cli, ConfigRejectsUnknownKeys) {
  write("bad.json", R"({"synth": {"omega_hz": 200, "sustain": 1}})");
  const Result r = run("--config bad.json synth");
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(json::parse(r.err).at("message").get<std::string>().find("sustain"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir_ / "drum.wav"));

  write("bad.toml", "typo = 3\n");
  EXPECT_EQ(run("--config bad.toml synth").code, 3);
  write("broken.json", "{\"synth\": ");
  EXPECT_EQ(run("--config broken.json synth").code, 3);
}

TEST_F(Cli, OutputDirectoryFromEnvironmentAndFlag) {
  ASSERT_EQ(run("synth", "HEARSHAPE_OUT=from_env").code, 0);
  EXPECT_TRUE(fs::exists(dir_ / "from_env" / "drum.wav"));
  ASSERT_EQ(run("synth --out-dir from_flag", "HEARSHAPE_OUT=from_env").code, 0);
  EXPECT_TRUE(fs::exists(dir_ / "from_flag" / "drum.wav"));
}

TEST_F(Cli, FeaturesPadsToPowerOfTwo) {
  std::vector<float> x(3000);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = float(std::sin(0.05 * double(i)));
  hearshape::wav::write(dir_ / "short.wav", x, 22050);
  const Result r = run("features --in short.wav --J 6 --png");
  ASSERT_EQ(r.code, 0) << r.err;
  const json s = json::parse(r.out);
  EXPECT_EQ(s.at("n_samples"), 4096);
  EXPECT_EQ(s.at("frames"), 4096 / 64);
  EXPECT_EQ(s.at("paths"), 1 + 6 + 15);
  EXPECT_TRUE(fs::exists(dir_ / "features.f32"));
  EXPECT_TRUE(fs::exists(dir_ / "features.png"));
}

TEST_F(Cli, TinyPipeline) {
  const std::string data = "dataset --points-per-dim 3 --n-samples 4096 --J 6 --no-audio --quiet";
  Result r = run(data);
  ASSERT_EQ(r.code, 0) << r.err;
  json s = json::parse(r.out);
  EXPECT_EQ(s.at("entries"), 243);
  EXPECT_EQ(s.at("val"), 1);

  const std::string train = " --quiet train --epochs 2 --steps-per-epoch 3 --batch-size 8 --seed 4";
  r = run(train);
  ASSERT_EQ(r.code, 0) << r.err;
  s = json::parse(r.out);
  EXPECT_EQ(s.at("val_size"), 1);
  EXPECT_TRUE(fs::exists(dir_ / "model.bin"));
  EXPECT_TRUE(fs::exists(dir_ / "train_history.csv"));
  const std::string first = slurp(dir_ / "model.bin");
  ASSERT_EQ(run(train + " --model again").code, 0);
  EXPECT_EQ(first, slurp(dir_ / "again.bin"));

  r = run("eval");
  ASSERT_EQ(r.code, 0) << r.err;
  const json metrics = json::parse(slurp(dir_ / "metrics_val.json"));
  EXPECT_EQ(metrics.at("count"), 1);
  EXPECT_TRUE(metrics.at("mean_distance").is_number());

  r = run("interp --count 3 --delta 0.1");
  ASSERT_EQ(r.code, 0) << r.err;
  s = json::parse(r.out);
  EXPECT_EQ(s.at("count"), 1);  // the validation split holds one drum
  EXPECT_TRUE(fs::exists(dir_ / "interp.csv"));
}

TEST_F(Cli, HeatmapWritesBothKinds) {
  const Result r = run("heatmap --resolution 3 --n-samples 4096 --J 5 --alpha 1");
  ASSERT_EQ(r.code, 0) << r.err;
  const json s = json::parse(r.out);
  EXPECT_TRUE(s.contains("scattering_smaller_fraction"));
  for (const char* kind : {"scattering", "fourier_modulus"}) {
    for (const char* ext : {".csv", ".png", ".json"})
      EXPECT_TRUE(fs::exists(dir_ / (std::string("heatmap_") + kind + ext))) << kind << ext;
    EXPECT_LT(s.at(kind).at("asymmetry").get<double>(), 1e-6);
  }
  EXPECT_EQ(run("heatmap --resolution 3 --delta 0.6").code, 3);
}

TEST_F(Cli, ReconstructWritesAudioAndHistory) {
  const Result r = run("reconstruct --n-samples 4096 --J 4 --N 2 --iters 20");
  ASSERT_EQ(r.code, 0) << r.err;
  const json run0 = json::parse(r.out).at("runs").at(0);
  EXPECT_LT(run0.at("final_error").get<double>(), run0.at("initial_error").get<double>());
  for (const char* f : {"target.wav", "reconstruction.wav", "reconstruction_history.csv", "reconstruction.json",
                        "spectrogram_target.png", "spectrogram_reconstruction.png", "spectrogram_reconstruction.csv"})
    EXPECT_TRUE(fs::exists(dir_ / f)) << f;
  std::istringstream csv(slurp(dir_ / "reconstruction_history.csv"));
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "iter,error,best,step,accepted");
  int rows = 0;
  while (std::getline(csv, line)) ++rows;
  EXPECT_EQ(rows, 21);  // iteration 0 is the initialization
  EXPECT_EQ(hearshape::wav::read(dir_ / "reconstruction.wav").samples.size(), 4096u);
}

TEST_F(Cli, ReconstructSweep) {
  const Result r = run("reconstruct --n-samples 2048 --J 3 4 --N 1 --iters 3");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(r.out).at("runs").size(), 2u);
  EXPECT_TRUE(fs::exists(dir_ / "reconstruction_J3_N1.wav"));
  EXPECT_TRUE(fs::exists(dir_ / "reconstruction_history_J4_N1.csv"));
}

}  // namespace
