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

// A trained checkpoint bundled with everything needed to turn a waveform
// into a shape estimate: the grid it was normalized against and the
// feature settings it was trained on.

#pragma once

#include <array>
#include <mutex>
#include <span>

#include <json.hpp>

#include "hearshape/dataset/grid.hpp"
#include "hearshape/dataset/render.hpp"
#include "hearshape/nn/checkpoint.hpp"
#include "hearshape/nn/train.hpp"
#include "hearshape/scattering/filterbank.hpp"

namespace hearshape::nn {

inline nlohmann::json to_json(const dataset::FeatureSettings& f) {
  return {{"J", f.J}, {"N", f.N}, {"eps", f.eps}};
}

inline dataset::FeatureSettings feature_settings_from_json(const nlohmann::json& j) {
  dataset::FeatureSettings f;
  f.J = j.at("J").get<int>();
  f.N = j.at("N").get<int>();
  f.eps = j.at("eps").get<double>();
  return f;
}

/// Header fields written next to the weights by the training command.
inline nlohmann::json checkpoint_info(const dataset::GridSpec& grid, const dataset::FeatureSettings& features,
                                      const TrainConfig& cfg, const TrainResult& res) {
  return {{"grid", dataset::to_json(grid)},
          {"features", to_json(features)},
          {"train", to_json(cfg)},
          {"epoch", res.best_epoch},
          {"val_distance", res.best_val_distance},
          {"val_loss", res.best_val_loss}};
}

struct Prediction {
  std::array<double, 5> unit{};  // raw network output, normalized units
  ShapeVector theta;             // clamped to the grid and mapped back
};

class Predictor {
 public:
  explicit Predictor(const std::filesystem::path& checkpoint) : ck_(load_checkpoint(checkpoint)) {
    require(ck_.header.contains("grid") && ck_.header.contains("features"), Errc::io_error,
            "checkpoint header lacks grid or feature settings", checkpoint.string());
    grid_ = dataset::grid_from_json(ck_.header.at("grid"));
    features_ = feature_settings_from_json(ck_.header.at("features"));
    fb_ = scattering::build_filterbank(grid_.n_samples, features_.J);
  }

  const dataset::GridSpec& grid() const { return grid_; }
  const dataset::FeatureSettings& features() const { return features_; }
  const nlohmann::json& header() const { return ck_.header; }
  Wav2Shape<float>& model() { return *ck_.model; }

  /// `wave` must be sampled at the grid's rate; it is zero-padded or
  /// truncated to the grid's length.
  Prediction predict(std::span<const float> wave) {
    std::vector<float> x(grid_.n_samples, 0.0f);
    std::copy_n(wave.begin(), std::min(wave.size(), x.size()), x.begin());
    const auto f = dataset::log_features(x, fb_, features_.N, features_.eps);
    Prediction p;
    {
      std::lock_guard lock(mu_);  // layers cache activations
      p.unit = predict_one(*ck_.model, f);
    }
    p.theta = dataset::denormalize_clamped(p.unit, grid_);
    return p;
  }

 private:
  Checkpoint ck_;
  dataset::GridSpec grid_;
  dataset::FeatureSettings features_;
  scattering::Filterbank fb_;
  std::mutex mu_;
};

inline nlohmann::json user_units(const ShapeVector& t) {
  return {{"omega_hz", t.omega_hz()}, {"tau", t.tau}, {"p", t.p}, {"D", t.D}, {"alpha", t.alpha}};
}

}  // namespace hearshape::nn
