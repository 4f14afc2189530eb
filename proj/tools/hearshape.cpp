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

// hearshape command-line front end. Every subcommand is a thin wrapper over
// the library; outputs go under --out-dir (default $HEARSHAPE_OUT or ".").
//
// Exit codes: 0 ok, 1 runtime failure, 2 usage error, 3 invalid parameters.
// Failures print one JSON object on stderr.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "hearshape/hearshape.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace hearshape;

namespace {

// TOML through CLI11, or JSON when the file starts with '{'. Nested JSON
// objects address subcommands, e.g. {"train": {"epochs": 10}}. Keys may use
// '_' or '-'.
class ConfigFile : public CLI::ConfigBase {
 public:
  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    const std::string text{std::istreambuf_iterator<char>(input), std::istreambuf_iterator<char>()};
    const auto first = text.find_first_not_of(" \t\r\n");
    std::vector<CLI::ConfigItem> items;
    if (first != std::string::npos && text[first] == '{') {
      json j;
      try {
        j = json::parse(text);
      } catch (const json::exception& e) {
        throw CLI::ConfigError(std::string("config is not valid JSON: ") + e.what());
      }
      flatten(j, {}, items);
    } else {
      std::istringstream in(text);
      items = CLI::ConfigBase::from_config(in);
    }
    for (auto& item : items) std::replace(item.name.begin(), item.name.end(), '_', '-');
    return items;
  }

 private:
  static std::string scalar(const json& v, const std::string& key) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number()) return v.dump();
    throw CLI::ConfigError("config value for '" + key + "' must be a string, number or boolean");
  }

  static void flatten(const json& j, const std::vector<std::string>& parents, std::vector<CLI::ConfigItem>& out) {
    if (!j.is_object()) throw CLI::ConfigError("config sections must be JSON objects");
    for (const auto& [key, value] : j.items()) {
      if (value.is_object()) {
        auto sub = parents;
        sub.push_back(key);
        flatten(value, sub, out);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      if (value.is_array())
        for (const auto& v : value) item.inputs.push_back(scalar(v, key));
      else
        item.inputs.push_back(scalar(value, key));
      out.push_back(std::move(item));
    }
  }
};

struct Global {
  std::string out_dir = ".";
  unsigned threads = 0;
  bool quiet = false;

  // Output paths are relative to the output directory.
  fs::path out(const std::string& name) const {
    fs::path p(name);
    if (p.is_relative()) p = fs::path(out_dir) / p;
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    return p;
  }
  fs::path dir() const {
    fs::create_directories(out_dir);
    return out_dir;
  }
};

void print(const json& j) { std::cout << j.dump(2) << "\n"; }

void write_json(const fs::path& path, const json& j) {
  std::ofstream f(path);
  require(static_cast<bool>(f), Errc::io_error, "cannot open for writing", path.string());
  f << j.dump(2) << "\n";
}

json read_json(const fs::path& path) {
  std::ifstream f(path);
  require(static_cast<bool>(f), Errc::io_error, "cannot open", path.string());
  try {
    return json::parse(f);
  } catch (const json::exception& e) {
    throw Error(Errc::io_error, std::string("malformed JSON: ") + e.what(), path.string());
  }
}

// Shape vector in user units.
struct ThetaArgs {
  double omega_hz, tau, p, D, alpha;
  explicit ThetaArgs(const ShapeVector& t) : omega_hz(t.omega_hz()), tau(t.tau), p(t.p), D(t.D), alpha(t.alpha) {}
  ShapeVector get() const { return ShapeVector::from_hz(omega_hz, tau, p, D, alpha); }
};

void add_theta(CLI::App* app, ThetaArgs& t) {
  app->add_option("--omega-hz", t.omega_hz, "fundamental frequency (Hz)")->capture_default_str();
  app->add_option("--tau", t.tau, "decay time of the fundamental (s)")->capture_default_str();
  app->add_option("--p", t.p, "frequency-dependent damping")->capture_default_str();
  app->add_option("--D", t.D, "inharmonicity")->capture_default_str();
  app->add_option("--alpha", t.alpha, "aspect ratio, short side over long side")->capture_default_str();
}

struct StrikeArgs {
  std::vector<double> strike = {0.5, 0.5};
  std::vector<double> pickup = {0.5, 0.5};
  double width = StrikeConfig{}.spatial_width;
  std::string profile = "gaussian";
  StrikeConfig get() const {
    StrikeConfig s;
    s.strike_pos = {strike[0], strike[1]};
    s.pickup_pos = {pickup[0], pickup[1]};
    s.spatial_width = width;
    s.profile = profile == "dirac" ? SpatialProfile::dirac : SpatialProfile::gaussian;
    return s;
  }
};

void add_strike(CLI::App* app, StrikeArgs& s, bool with_position = true) {
  if (with_position)
    app->add_option("--strike", s.strike, "strike position u1 u2 in (0, 1)")->expected(2)->capture_default_str();
  app->add_option("--pickup", s.pickup, "pickup position u1 u2 in [0, 1]")->expected(2)->capture_default_str();
  app->add_option("--width", s.width, "Gaussian strike width, fraction of the long side")->capture_default_str();
  app->add_option("--profile", s.profile, "strike profile")
      ->check(CLI::IsMember({"gaussian", "dirac"}))
      ->capture_default_str();
}

struct SynthArgs {
  std::size_t n_samples = std::size_t(1) << 15;
  double sample_rate = 22050.0;
  int M = 10;
  SynthConfig get() const {
    SynthConfig c;
    c.n_samples = n_samples;
    c.sample_rate = sample_rate;
    c.M = M;
    return c;
  }
};

void add_synth(CLI::App* app, SynthArgs& s) {
  app->add_option("--n-samples", s.n_samples, "samples per clip")->capture_default_str();
  app->add_option("--sample-rate", s.sample_rate, "sample rate (Hz)")->capture_default_str();
  app->add_option("--M", s.M, "modes per axis")->capture_default_str();
}

std::vector<float> to_float(const std::vector<double>& x) { return {x.begin(), x.end()}; }

// ---------------------------------------------------------------- synth

struct SynthCmd {
  ThetaArgs theta{ShapeVector{}};
  StrikeArgs strike;
  SynthArgs synth;
  std::string out = "drum.wav";
  std::string modal;
  bool raw = false;

  void setup(CLI::App* app) {
    add_theta(app, theta);
    add_strike(app, strike);
    add_synth(app, synth);
    app->add_option("--out", out, "output WAV")->capture_default_str();
    app->add_option("--modal-json", modal, "also write the modal grid as JSON");
    app->add_flag("--raw", raw, "skip peak normalization");
  }

  void run(const Global& g) {
    const ShapeVector t = theta.get();
    validate(t);
    const StrikeConfig s = strike.get();
    validate(s);
    SynthConfig cfg = synth.get();
    cfg.peak_normalize = !raw;
    const std::string bytes = service::render_wav(t, s, cfg);
    const fs::path path = g.out(out);
    {
      std::ofstream f(path, std::ios::binary);
      require(static_cast<bool>(f), Errc::io_error, "cannot open for writing", path.string());
      f.write(bytes.data(), std::streamsize(bytes.size()));
    }
    json summary = {{"wav", path.string()},
                    {"samples", cfg.n_samples},
                    {"sample_rate", cfg.sample_rate},
                    {"theta", nn::user_units(t)}};
    if (!modal.empty()) {
      const fs::path mp = g.out(modal);
      write_json(mp, service::modal_json(t, cfg.M));
      summary["modal_json"] = mp.string();
    }
    print(summary);
  }
};

// ---------------------------------------------------------------- features

struct FeaturesCmd {
  std::string in;
  int J = 8, N = 2;
  double eps = 1e-3;
  std::string out = "features";
  bool png = false;

  void setup(CLI::App* app) {
    app->add_option("--in", in, "input WAV")->required();
    app->add_option("--J", J, "scattering scale exponent")->capture_default_str();
    app->add_option("--N", N, "scattering order, 1 or 2")->capture_default_str();
    app->add_option("--eps", eps, "log compression offset; 0 keeps raw coefficients")->capture_default_str();
    app->add_option("--out", out, "output stem for .f32 and .json")->capture_default_str();
    app->add_flag("--png", png, "also write a [path x frame] image");
  }

  void run(const Global& g) {
    require(eps >= 0, Errc::invalid_argument, "eps must be >= 0", "eps");
    const wav::Audio audio = wav::read(in);
    require(!audio.samples.empty(), Errc::invalid_argument, "WAV holds no samples", "in");
    // Zero-pad to a power of two, at least one averaging window long.
    std::size_t n = std::size_t(1) << std::max(J, 0);
    while (n < audio.samples.size()) n *= 2;
    std::vector<double> x(n, 0.0);
    std::copy(audio.samples.begin(), audio.samples.end(), x.begin());
    const auto fb = scattering::build_filterbank(n, J);
    auto S = scattering::scattering_forward(x, fb, N);
    if (eps > 0) S = scattering::log_compress(S, eps);
    const auto m = scattering::to_float(S);
    scattering::FeatureMeta meta;
    meta.n_samples = n;
    meta.sample_rate = audio.sample_rate;
    meta.J = J;
    meta.N = N;
    meta.eps = eps;
    meta.frames = m.frames;
    meta.paths = S.paths;
    const fs::path stem = g.out(out);
    scattering::write_features(stem, m, meta);
    json summary = {{"stem", stem.string()}, {"frames", m.frames}, {"paths", m.paths}, {"n_samples", n},
                    {"padded", n - audio.samples.size()}};
    if (png) {
      image::Matrix img(m.paths, m.frames);
      for (std::size_t f = 0; f < m.frames; ++f)
        for (std::size_t p = 0; p < m.paths; ++p) img(p, f) = m.values[f * m.paths + p];
      auto path = stem;
      path += ".png";
      image::write_png(path, img, false, eps == 0);
      summary["png"] = path.string();
    }
    print(summary);
  }
};

// ---------------------------------------------------------------- dataset

struct DatasetCmd {
  int points = 6;
  std::uint64_t seed = dataset::GridSpec{}.seed;
  SynthArgs synth;
  StrikeArgs strike;
  int J = 8, N = 2;
  double eps = 1e-3;
  bool no_audio = false;
  bool manifest_only = false;
  std::array<std::vector<double>, 5> ranges;

  void setup(CLI::App* app) {
    app->add_option("--points-per-dim", points, "grid points along every axis")->capture_default_str();
    app->add_option("--seed", seed, "split seed")->capture_default_str();
    for (std::size_t d = 0; d < 5; ++d) {
      std::string name = dataset::kAxisNames[d];
      std::replace(name.begin(), name.end(), '_', '-');
      app->add_option("--" + name + "-range", ranges[d], std::string("min max of ") + dataset::kAxisNames[d])
          ->expected(2);
    }
    add_synth(app, synth);
    add_strike(app, strike);
    app->add_option("--J", J, "scattering scale exponent")->capture_default_str();
    app->add_option("--N", N, "scattering order")->capture_default_str();
    app->add_option("--eps", eps, "log compression offset")->capture_default_str();
    app->add_flag("--no-audio", no_audio, "do not keep WAV files");
    app->add_flag("--manifest-only", manifest_only, "write the manifest without rendering");
  }

  void run(const Global& g) {
    dataset::GridSpec spec;
    spec.set_points_per_dim(points);
    spec.seed = seed;
    spec.sample_rate = synth.sample_rate;
    spec.n_samples = synth.n_samples;
    spec.M = synth.M;
    for (std::size_t d = 0; d < 5; ++d)
      if (!ranges[d].empty()) {
        spec.axes[d].min = ranges[d][0];
        spec.axes[d].max = ranges[d][1];
      }
    dataset::Manifest m = dataset::generate_grid(spec);
    const fs::path root = g.dir();
    json summary = {{"entries", m.entries.size()},
                    {"train", m.count(dataset::Split::train)},
                    {"val", m.count(dataset::Split::val)},
                    {"test", m.count(dataset::Split::test)}};
    if (!manifest_only) {
      dataset::RenderOptions opt;
      opt.features = {J, N, eps};
      opt.strike = strike.get();
      opt.write_waveforms = !no_audio;
      opt.threads = g.threads;
      opt.verbose = !g.quiet;
      const auto report = dataset::render(m, root, opt);
      summary["rendered"] = report.rendered;
      summary["invalid"] = report.invalid;
    }
    dataset::save_manifest(root / "manifest.json", m);
    summary["manifest"] = (root / "manifest.json").string();
    print(summary);
  }
};

// ---------------------------------------------------------------- train / eval

// Feature settings are read back from the first rendered entry's sidecar.
dataset::FeatureSettings dataset_features(const dataset::Manifest& m, const fs::path& root) {
  for (const auto& e : m.entries) {
    if (!e.valid || e.feature_path.empty()) continue;
    const auto meta = scattering::meta_from_json(read_json(root / (e.feature_path + ".json")));
    return {meta.J, meta.N, meta.eps};
  }
  throw Error(Errc::empty_split, "dataset has no rendered entries", root.string());
}

fs::path data_root(const std::string& data, const Global& g) { return data.empty() ? fs::path(g.out_dir) : fs::path(data); }
fs::path model_path(const std::string& model, const Global& g) {
  return model.empty() ? fs::path(g.out_dir) / "model" : fs::path(model);
}

struct TrainCmd {
  std::string data;
  std::string model = "model";
  nn::TrainConfig cfg;
  std::string history = "train_history.csv";

  void setup(CLI::App* app) {
    app->add_option("--data", data, "dataset directory (default: output directory)");
    app->add_option("--model", model, "checkpoint stem to write")->capture_default_str();
    app->add_option("--epochs", cfg.epochs, "epochs")->capture_default_str();
    app->add_option("--steps-per-epoch", cfg.steps_per_epoch, "minibatches per epoch")->capture_default_str();
    app->add_option("--batch-size", cfg.batch_size, "minibatch size")->capture_default_str();
    app->add_option("--learning-rate,--lr", cfg.learning_rate, "Adam step size")->capture_default_str();
    app->add_option("--seed", cfg.seed, "initialization and sampling seed")->capture_default_str();
    app->add_option("--pooling", cfg.pooling, "pooling factor after each conv block (default: automatic)");
    app->add_option("--history", history, "per-epoch CSV")->capture_default_str();
  }

  void run(const Global& g) {
    nn::validate(cfg);
    const fs::path root = data_root(data, g);
    const dataset::Manifest m = dataset::load_manifest(root / "manifest.json");
    const dataset::FeatureSettings feats = dataset_features(m, root);
    cfg.J = feats.J;
    cfg.N = feats.N;
    cfg.eps = feats.eps;
    cfg.verbose = !g.quiet;
    const auto train_set = dataset::load_split(m, root, dataset::Split::train);
    const auto val_set = dataset::load_split(m, root, dataset::Split::val);
    auto res = nn::train(cfg, train_set, val_set);
    const fs::path stem = g.out(model);
    nn::save_checkpoint(stem, *res.model, nn::checkpoint_info(m.grid, feats, cfg, res));
    const fs::path hist = g.out(history);
    nn::write_history_csv(hist, res.history);
    json summary = {{"checkpoint", stem.string()},
                    {"history", hist.string()},
                    {"best_epoch", res.best_epoch},
                    {"val_distance", res.best_val_distance},
                    {"val_loss", res.best_val_loss},
                    {"train_size", train_set.size()},
                    {"val_size", val_set.size()}};
    write_json(g.out("train_summary.json"), summary);
    print(summary);
  }
};

struct EvalCmd {
  std::string data;
  std::string model;
  std::string split = "val";
  std::string out;

  void setup(CLI::App* app) {
    app->add_option("--data", data, "dataset directory (default: output directory)");
    app->add_option("--model", model, "checkpoint (default: <out-dir>/model)");
    app->add_option("--split", split, "split to evaluate")
        ->check(CLI::IsMember({"train", "val", "test"}))
        ->capture_default_str();
    app->add_option("--out", out, "metrics JSON (default: metrics_<split>.json)");
  }

  void run(const Global& g) {
    const fs::path root = data_root(data, g);
    const dataset::Manifest m = dataset::load_manifest(root / "manifest.json");
    nn::Predictor predictor(model_path(model, g));
    const auto s = dataset::load_split(m, root, dataset::split_from_string(split));
    json metrics = nn::to_json(nn::evaluate(predictor.model(), s));
    metrics["split"] = split;
    metrics["baseline_distance"] = 0.87;
    const fs::path path = g.out(out.empty() ? "metrics_" + split + ".json" : out);
    write_json(path, metrics);
    print(metrics);
  }
};

// ---------------------------------------------------------------- heatmap

struct HeatmapCmd {
  ThetaArgs theta{experiments::reference_theta()};
  StrikeArgs strike;
  SynthArgs synth;
  int resolution = 9;
  double delta = 0.1;
  std::string feature = "both";
  int J = 8, N = 2;

  void setup(CLI::App* app) {
    add_theta(app, theta);
    add_strike(app, strike, false);
    add_synth(app, synth);
    app->add_option("--resolution", resolution, "strike positions per axis")->capture_default_str();
    app->add_option("--delta", delta, "neighbor offset")->capture_default_str();
    app->add_option("--feature", feature, "feature kind")
        ->check(CLI::IsMember({"both", "scattering", "fourier_modulus", "fourier"}))
        ->capture_default_str();
    app->add_option("--J", J, "scattering scale exponent")->capture_default_str();
    app->add_option("--N", N, "scattering order")->capture_default_str();
  }

  void run(const Global& g) {
    experiments::StudyConfig cfg;
    cfg.synth = synth.get();
    cfg.strike = strike.get();
    cfg.J = J;
    cfg.N = N;
    cfg.threads = g.threads;
    const ShapeVector t = theta.get();
    std::vector<experiments::FeatureKind> kinds;
    if (feature == "both")
      kinds = {experiments::FeatureKind::scattering, experiments::FeatureKind::fourier_modulus};
    else
      kinds = {experiments::feature_kind_from_string(feature)};
    json summary = {{"theta", nn::user_units(t)}, {"resolution", resolution}, {"delta", delta}};
    std::vector<experiments::LaplacianHeatmap> maps;
    for (const auto kind : kinds) {
      maps.push_back(experiments::heatmap(t, resolution, delta, kind, cfg));
      const auto& hm = maps.back();
      const std::string stem = "heatmap_" + experiments::to_string(kind);
      image::write_csv(g.out(stem + ".csv"), hm.H);
      image::write_png(g.out(stem + ".png"), hm.H, true, false);
      write_json(g.out(stem + ".json"), experiments::to_json(hm));
      summary[experiments::to_string(kind)] = {{"asymmetry", experiments::heatmap_asymmetry(hm)},
                                               {"max", *std::max_element(hm.H.values.begin(), hm.H.values.end())}};
    }
    if (maps.size() == 2) {
      std::size_t smaller = 0;
      for (std::size_t i = 0; i < maps[0].H.values.size(); ++i) smaller += maps[0].H.values[i] < maps[1].H.values[i];
      summary["scattering_smaller_fraction"] = double(smaller) / double(maps[0].H.values.size());
    }
    write_json(g.out("heatmap_summary.json"), summary);
    print(summary);
  }
};

// ---------------------------------------------------------------- interp

struct InterpCmd {
  std::string data;
  std::string model;
  std::string split = "val";
  int count = 60;
  double delta = 0.1;
  std::uint64_t seed = 0;
  std::vector<double> at = {0.5, 0.5};

  void setup(CLI::App* app) {
    app->add_option("--data", data, "dataset directory (default: output directory)");
    app->add_option("--model", model, "checkpoint (default: <out-dir>/model)");
    app->add_option("--split", split, "split to sample drums from")
        ->check(CLI::IsMember({"train", "val", "test"}))
        ->capture_default_str();
    app->add_option("--count", count, "number of drums")->capture_default_str();
    app->add_option("--delta", delta, "neighbor offset")->capture_default_str();
    app->add_option("--seed", seed, "drum sampling seed")->capture_default_str();
    app->add_option("--strike", at, "center strike position u1 u2")->expected(2)->capture_default_str();
  }

  void run(const Global& g) {
    require(count >= 1, Errc::invalid_argument, "count must be >= 1", "count");
    const fs::path root = data_root(data, g);
    const dataset::Manifest m = dataset::load_manifest(root / "manifest.json");
    nn::Predictor predictor(model_path(model, g));
    const dataset::Split sp = dataset::split_from_string(split);
    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < m.entries.size(); ++i)
      if (m.entries[i].split == sp && m.entries[i].valid) pool.push_back(i);
    require(!pool.empty(), Errc::empty_split, "split holds no valid entries", "split");
    Rng rng(seed);
    shuffle(pool, rng);
    pool.resize(std::min(pool.size(), std::size_t(count)));

    experiments::StudyConfig cfg;
    cfg.synth.n_samples = predictor.grid().n_samples;
    cfg.synth.sample_rate = predictor.grid().sample_rate;
    cfg.synth.M = predictor.grid().M;
    cfg.J = predictor.features().J;
    cfg.N = predictor.features().N;
    const auto fb = scattering::build_filterbank(cfg.synth.n_samples, cfg.J);

    const fs::path csv = g.out("interp.csv");
    std::ofstream out(csv);
    require(static_cast<bool>(out), Errc::io_error, "cannot open for writing", csv.string());
    out << "id,true_error,interp_error,true_distance,interp_distance\n";
    std::size_t worse = 0;
    double sum_true = 0, sum_interp = 0, dist_true = 0, dist_interp = 0;
    for (const std::size_t i : pool) {
      const auto& e = m.entries[i];
      const auto r = experiments::interpolate_and_predict(predictor.model(), predictor.grid(), e.theta,
                                                          {at[0], at[1]}, delta, cfg, predictor.features().eps, fb);
      worse += r.interp_error > r.true_error;
      sum_true += r.true_error;
      sum_interp += r.interp_error;
      dist_true += std::sqrt(r.true_error);
      dist_interp += std::sqrt(r.interp_error);
      char line[160];
      std::snprintf(line, sizeof line, "%zu,%.9g,%.9g,%.9g,%.9g\n", e.id, r.true_error, r.interp_error,
                    std::sqrt(r.true_error), std::sqrt(r.interp_error));
      out << line;
    }
    const double n = double(pool.size());
    json summary = {{"count", pool.size()},
                    {"delta", delta},
                    {"interp_worse_fraction", double(worse) / n},
                    {"mean_true_sq_error", sum_true / n},
                    {"mean_interp_sq_error", sum_interp / n},
                    {"mean_true_distance", dist_true / n},
                    {"mean_interp_distance", dist_interp / n},
                    {"csv", csv.string()}};
    write_json(g.out("interp_summary.json"), summary);
    print(summary);
  }
};

// ---------------------------------------------------------------- reconstruct

struct ReconstructCmd {
  ThetaArgs theta{experiments::reference_theta()};
  StrikeArgs strike;
  SynthArgs synth;
  std::vector<int> J = {5};
  std::vector<int> N = {2};
  experiments::ReconstructConfig cfg;
  std::size_t window = 1024, hop = 256;

  void setup(CLI::App* app) {
    add_theta(app, theta);
    add_strike(app, strike);
    add_synth(app, synth);
    app->add_option("--J", J, "scattering scale exponent; several values run a sweep")->capture_default_str();
    app->add_option("--N", N, "scattering order; several values run a sweep")->capture_default_str();
    app->add_option("--iters", cfg.max_iters, "descent iterations")->capture_default_str();
    app->add_option("--learning-rate,--lr", cfg.learning_rate, "initial step size")->capture_default_str();
    app->add_option("--momentum", cfg.momentum, "momentum")->capture_default_str();
    app->add_option("--seed", cfg.seed, "initialization seed")->capture_default_str();
    app->add_option("--max-retractions", cfg.max_retractions, "consecutive rejections before giving up")
        ->capture_default_str();
    app->add_option("--window", window, "spectrogram window")->capture_default_str();
    app->add_option("--hop", hop, "spectrogram hop")->capture_default_str();
  }

  void run(const Global& g) {
    require(cfg.max_iters >= 1, Errc::invalid_argument, "iters must be >= 1", "iters");
    require(cfg.learning_rate > 0, Errc::invalid_argument, "learning rate must be > 0", "learning_rate");
    require(cfg.momentum >= 0 && cfg.momentum < 1, Errc::invalid_argument, "momentum must lie in [0, 1)",
            "momentum");
    const ShapeVector t = theta.get();
    const SynthConfig sc = synth.get();
    const std::vector<float> target_f = synthesize(t, strike.get(), sc);
    const std::vector<double> target(target_f.begin(), target_f.end());
    const auto rate = static_cast<std::uint32_t>(sc.sample_rate);
    wav::write(g.out("target.wav"), target_f, rate);
    experiments::write_spectrogram(g.out("spectrogram_target"), experiments::spectrogram(target, window, hop));

    std::vector<std::pair<int, int>> runs;
    for (int j : J)
      for (int n : N) runs.emplace_back(j, n);
    const bool sweep = runs.size() > 1;
    std::vector<json> results(runs.size());
    std::vector<std::string> failures(runs.size());
    parallel_for(
        runs.size(),
        [&](std::size_t k) {
          const auto [j, n] = runs[k];
          const std::string tag = sweep ? "_J" + std::to_string(j) + "_N" + std::to_string(n) : "";
          const auto fb = scattering::build_filterbank(sc.n_samples, j);
          const auto S = scattering::scattering_forward(target, fb, n);
          experiments::ReconstructResult res;
          try {
            res = experiments::reconstruct(S, fb, n, cfg, &res);
          } catch (const Error& e) {
            if (e.code() != Errc::no_progress) throw;
            failures[k] = e.what();  // keep the partial result
          }
          wav::write(g.out("reconstruction" + tag + ".wav"), to_float(res.waveform), rate);
          experiments::write_history_csv(g.out("reconstruction_history" + tag + ".csv"), res.history);
          experiments::write_spectrogram(g.out("spectrogram_reconstruction" + tag),
                                         experiments::spectrogram(res.waveform, window, hop));
          results[k] = {{"J", j},
                        {"N", n},
                        {"initial_error", res.initial_error},
                        {"final_error", res.final_error},
                        {"reduction", res.initial_error / res.final_error},
                        {"iterations", res.history.size()},
                        {"target_norm", scattering::l2_norm(S)}};
          if (!failures[k].empty()) results[k]["stopped"] = failures[k];
        },
        g.threads);
    json summary = {{"theta", nn::user_units(t)}, {"runs", results}};
    write_json(g.out("reconstruction.json"), summary);
    print(summary);
  }
};

// ---------------------------------------------------------------- serve

struct ServeCmd {
  service::ServiceConfig cfg;
  std::string model;
  double max_upload_mb = 8.0;
  SynthArgs synth;
  StrikeArgs strike;

  void setup(CLI::App* app) {
    app->add_option("--host", cfg.host, "bind address")->capture_default_str();
    app->add_option("--port", cfg.port, "port; 0 picks a free one")->capture_default_str();
    app->add_option("--model", model, "checkpoint enabling /predict");
    app->add_option("--max-upload-mb", max_upload_mb, "largest accepted /predict body")->capture_default_str();
    add_synth(app, synth);
    add_strike(app, strike, false);
  }

  void run(const Global&) {
    require(max_upload_mb > 0, Errc::invalid_argument, "max upload must be > 0", "max_upload_mb");
    cfg.checkpoint = model;
    cfg.max_upload_bytes = std::size_t(max_upload_mb * 1024 * 1024);
    cfg.synth = synth.get();
    cfg.synth.peak_normalize = true;
    cfg.strike = strike.get();
    validate(cfg.strike);
    service::Service svc(cfg);
    const int port = svc.bind();
    std::cout << json{{"listening", cfg.host + ":" + std::to_string(port)}, {"predict", svc.has_model()}}.dump()
              << std::endl;
    require(svc.serve(), Errc::io_error, "server stopped unexpectedly");
  }
};

int exit_code(Errc c) {
  switch (c) {
    case Errc::io_error:
    case Errc::diverged_loss:
    case Errc::empty_split:
    case Errc::no_progress:
    case Errc::shape_mismatch:
    case Errc::length_mismatch:
      return 1;
    default:
      return 3;
  }
}

int fail(int code, const std::string& error, const std::string& message, const std::string& field = "") {
  std::cerr << json{{"error", error}, {"message", message}, {"field", field}, {"exit_code", code}}.dump() << std::endl;
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hearshape: drum shape from sound, and back"};
  app.set_version_flag("--version", service::kVersion);
  app.require_subcommand(1);
  app.fallthrough();
  app.config_formatter(std::make_shared<ConfigFile>());
  app.set_config("--config", "", "JSON or TOML file; flags given on the command line take precedence");
  app.allow_config_extras(CLI::config_extras_mode::error);

  Global g;
  if (const char* env = std::getenv("HEARSHAPE_OUT"); env && *env) g.out_dir = env;
  app.add_option("--out-dir", g.out_dir, "output directory (env HEARSHAPE_OUT)")->capture_default_str();
  app.add_option("--threads", g.threads, "worker threads, 0 for all cores")->capture_default_str();
  app.add_flag("--quiet", g.quiet, "no progress on stderr");

  SynthCmd synth;
  FeaturesCmd features;
  DatasetCmd dataset;
  TrainCmd train;
  EvalCmd eval;
  HeatmapCmd heatmap;
  InterpCmd interp;
  ReconstructCmd reconstruct;
  ServeCmd serve;
  std::vector<std::pair<CLI::App*, std::function<void()>>> commands;
  auto add = [&](auto& cmd, const char* name, const char* help) {
    CLI::App* sub = app.add_subcommand(name, help);
    cmd.setup(sub);
    commands.emplace_back(sub, [&cmd, &g] { cmd.run(g); });
  };
  add(synth, "synth", "render a drum to WAV");
  add(features, "features", "log-scattering features of a WAV");
  add(dataset, "dataset", "build the shape grid, its splits and features");
  add(train, "train", "train the shape regressor");
  add(eval, "eval", "evaluate a checkpoint on a split");
  add(heatmap, "heatmap", "Laplacian norm over strike positions, scattering vs Fourier modulus");
  add(interp, "interp", "predictions from interpolated vs true features");
  add(reconstruct, "reconstruct", "recover a waveform from its scattering coefficients");
  add(serve, "serve", "HTTP service for the web panel");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ConfigError& e) {
    return fail(3, "InvalidConfig", e.what());
  } catch (const CLI::ParseError& e) {
    return fail(2, "UsageError", e.what());
  }

  try {
    for (auto& [sub, run] : commands)
      if (sub->parsed()) run();
  } catch (const Error& e) {
    return fail(exit_code(e.code()), std::string(to_string(e.code())), e.what(), service::user_field(e.field()));
  } catch (const std::exception& e) {
    return fail(1, "RuntimeError", e.what());
  }
  return 0;
}
