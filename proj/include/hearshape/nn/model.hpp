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

#pragma once

#include <algorithm>
#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "hearshape/core/error.hpp"
#include "hearshape/core/random.hpp"
#include "hearshape/nn/layers.hpp"

namespace hearshape::nn {

/// Pooling per block: a window of 4 while at least 4 frames remain, then
/// whatever is left. For 2^J-hop features of a 2^15 signal this gives
/// J=6: 4,4,4,4; J=8: 4,4,4,2; J=10: 4,4,2,1; J=12: 4,2,1,1; J=14: 2,1,1,1.
inline std::vector<int> default_pooling(std::size_t frames, int blocks = 4) {
  std::vector<int> pools;
  std::size_t t = frames;
  for (int b = 0; b < blocks; ++b) {
    const std::size_t k = std::max<std::size_t>(1, std::min<std::size_t>(4, t));
    pools.push_back(int(k));
    t /= k;
  }
  return pools;
}

struct ModelConfig {
  std::size_t in_channels = 37;
  std::size_t frames = 128;
  std::size_t filters = 16;
  std::size_t kernel = 8;
  std::size_t hidden = 64;
  std::size_t outputs = 5;
  std::vector<int> pooling = {4, 4, 4, 2};

  std::size_t flattened_time() const {
    std::size_t t = frames;
    for (int k : pooling) t /= std::size_t(k);
    return t;
  }
};

inline void validate(const ModelConfig& c) {
  require(c.in_channels >= 1 && c.frames >= 1 && c.filters >= 1 && c.kernel >= 1 && c.hidden >= 1 &&
              c.outputs >= 1,
          Errc::invalid_argument, "model dimensions must be positive");
  require(c.pooling.size() == 4, Errc::invalid_argument, "pooling needs one window per block",
          "pooling");
  std::size_t t = c.frames;
  for (int k : c.pooling) {
    require(k >= 1 && t % std::size_t(k) == 0, Errc::shape_mismatch,
            "pooling schedule does not divide the frame count", "pooling");
    t /= std::size_t(k);
  }
}

inline nlohmann::json to_json(const ModelConfig& c) {
  return {{"in_channels", c.in_channels}, {"frames", c.frames}, {"filters", c.filters},
          {"kernel", c.kernel},           {"hidden", c.hidden}, {"outputs", c.outputs},
          {"pooling", c.pooling}};
}

inline ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.in_channels = j.at("in_channels");
  c.frames = j.at("frames");
  c.filters = j.at("filters");
  c.kernel = j.at("kernel");
  c.hidden = j.at("hidden");
  c.outputs = j.at("outputs");
  c.pooling = j.at("pooling").get<std::vector<int>>();
  return c;
}

/// Four convolutional blocks and two dense layers. Block 1 normalizes its
/// input before the convolution; blocks 2-4 normalize after it.
template <class T>
class Wav2Shape {
 public:
  explicit Wav2Shape(const ModelConfig& cfg, std::uint64_t seed = 0) : cfg_(cfg) {
    validate(cfg);
    Rng rng(seed);
    std::size_t ch = cfg.in_channels;
    for (int b = 1; b <= 4; ++b) {
      const std::string name = "block" + std::to_string(b);
      auto conv = std::make_unique<Conv1d<T>>(name + ".conv", ch, cfg.filters, cfg.kernel);
      conv->init(rng, 6.0);
      if (b == 1) {
        layers_.push_back(std::make_unique<BatchNorm<T>>(name + ".bn", ch));
        layers_.push_back(std::move(conv));
      } else {
        layers_.push_back(std::move(conv));
        layers_.push_back(std::make_unique<BatchNorm<T>>(name + ".bn", cfg.filters));
      }
      layers_.push_back(std::make_unique<ReLU<T>>());
      layers_.push_back(std::make_unique<AvgPool1d<T>>(std::size_t(cfg.pooling[b - 1])));
      ch = cfg.filters;
    }
    layers_.push_back(std::make_unique<Flatten<T>>());
    auto d1 = std::make_unique<Dense<T>>("dense1", cfg.filters * cfg.flattened_time(), cfg.hidden);
    d1->init(rng, 6.0);
    layers_.push_back(std::move(d1));
    layers_.push_back(std::make_unique<ReLU<T>>());
    auto d2 = std::make_unique<Dense<T>>("dense2", cfg.hidden, cfg.outputs);
    // Targets live in the unit cube; start predictions at its center.
    d2->init(rng, 3.0, T(0.5));
    layers_.push_back(std::move(d2));
  }

  const ModelConfig& config() const { return cfg_; }

  /// x: [batch, in_channels, frames] -> [batch, outputs].
  Tensor<T> forward(const Tensor<T>& x, bool train) {
    require(x.shape.size() == 3 && x.dim(1) == cfg_.in_channels && x.dim(2) == cfg_.frames,
            Errc::shape_mismatch, "input must be [batch, paths, frames] matching the model");
    Tensor<T> h = x;
    for (auto& l : layers_) h = l->forward(h, train);
    return h;
  }

  Tensor<T> backward(const Tensor<T>& grad_out) {
    Tensor<T> g = grad_out;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
    return g;
  }

  std::vector<Tensor<T>*> params() {
    std::vector<Tensor<T>*> out;
    for (auto& l : layers_)
      for (auto* p : l->params()) out.push_back(p);
    return out;
  }

  /// Parameters followed by batch-norm running statistics, in a fixed order.
  std::vector<Tensor<T>*> state() {
    std::vector<Tensor<T>*> out = params();
    for (auto& l : layers_)
      for (auto* p : l->buffers()) out.push_back(p);
    return out;
  }

  void zero_grad() {
    for (auto* p : params()) p->zero_grad();
  }

  std::vector<std::unique_ptr<Layer<T>>>& layers() { return layers_; }

 private:
  ModelConfig cfg_;
  std::vector<std::unique_ptr<Layer<T>>> layers_;
};

/// Flat copy of a model's state, used to keep the best epoch.
template <class T>
std::vector<std::vector<T>> snapshot(Wav2Shape<T>& m) {
  std::vector<std::vector<T>> s;
  for (auto* t : m.state()) s.push_back(t->data);
  return s;
}

template <class T>
void restore(Wav2Shape<T>& m, const std::vector<std::vector<T>>& s) {
  auto st = m.state();
  require(st.size() == s.size(), Errc::shape_mismatch, "snapshot does not match the model");
  for (std::size_t i = 0; i < st.size(); ++i) {
    require(st[i]->data.size() == s[i].size(), Errc::shape_mismatch, "snapshot does not match the model");
    st[i]->data = s[i];
  }
}

}  // namespace hearshape::nn
