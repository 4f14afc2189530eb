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
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "hearshape/core/error.hpp"
#include "hearshape/core/random.hpp"
#include "hearshape/dataset/render.hpp"
#include "hearshape/nn/adam.hpp"
#include "hearshape/nn/model.hpp"

namespace hearshape::nn {

struct TrainConfig {
  std::size_t batch_size = 64;
  int epochs = 30;
  int steps_per_epoch = 50;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  int J = 8;
  int N = 2;
  double eps = 1e-3;
  std::vector<int> pooling;  // empty: default_pooling(frames)
  bool verbose = false;
};

inline void validate(const TrainConfig& c) {
  require(c.batch_size >= 1, Errc::invalid_argument, "batch_size must be >= 1", "batch_size");
  require(c.epochs >= 1, Errc::invalid_argument, "epochs must be >= 1", "epochs");
  require(c.steps_per_epoch >= 1, Errc::invalid_argument, "steps_per_epoch must be >= 1",
          "steps_per_epoch");
  require(c.learning_rate > 0 && std::isfinite(c.learning_rate), Errc::invalid_argument,
          "learning_rate must be > 0", "learning_rate");
}

inline nlohmann::json to_json(const TrainConfig& c) {
  return {{"batch_size", c.batch_size}, {"epochs", c.epochs}, {"steps_per_epoch", c.steps_per_epoch},
          {"learning_rate", c.learning_rate}, {"seed", c.seed}, {"J", c.J}, {"N", c.N},
          {"eps", c.eps}, {"pooling", c.pooling}};
}

/// Copies samples `idx` into a [batch, paths, frames] tensor; stored
/// features are [frame][path].
template <class T>
Tensor<T> make_batch(const dataset::Samples& s, const std::vector<std::size_t>& idx) {
  Tensor<T> x({idx.size(), s.paths, s.frames});
  for (std::size_t b = 0; b < idx.size(); ++b) {
    const float* src = s.sample(idx[b]);
    T* dst = &x.data[b * s.paths * s.frames];
    for (std::size_t f = 0; f < s.frames; ++f)
      for (std::size_t p = 0; p < s.paths; ++p) dst[p * s.frames + f] = T(src[f * s.paths + p]);
  }
  return x;
}

/// Mean squared error over batch and outputs; writes its gradient.
template <class T>
double mse_loss(const Tensor<T>& pred, const std::vector<std::array<double, 5>>& target,
                Tensor<T>* grad = nullptr) {
  const std::size_t B = pred.dim(0), K = pred.dim(1);
  if (grad) *grad = Tensor<T>(pred.shape);
  double loss = 0;
  const double n = double(B * K);
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t k = 0; k < K; ++k) {
      const double d = double(pred.data[b * K + k]) - target[b][k];
      loss += d * d;
      if (grad) grad->data[b * K + k] = T(2.0 * d / n);
    }
  return loss / n;
}

inline double euclidean(const std::array<double, 5>& a, const std::array<double, 5>& b) {
  double s = 0;
  for (std::size_t k = 0; k < 5; ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(s);
}

/// Eval-mode predictions for every sample, in order.
template <class T>
std::vector<std::array<double, 5>> predict(Wav2Shape<T>& model, const dataset::Samples& s,
                                           std::size_t chunk = 256) {
  std::vector<std::array<double, 5>> out;
  out.reserve(s.size());
  for (std::size_t start = 0; start < s.size(); start += chunk) {
    std::vector<std::size_t> idx;
    for (std::size_t i = start; i < std::min(s.size(), start + chunk); ++i) idx.push_back(i);
    const Tensor<T> y = model.forward(make_batch<T>(s, idx), false);
    for (std::size_t b = 0; b < idx.size(); ++b) {
      std::array<double, 5> p;
      for (std::size_t k = 0; k < 5; ++k) p[k] = double(y.data[b * 5 + k]);
      out.push_back(p);
    }
  }
  return out;
}

/// Single-sample prediction from a [frame][path] feature matrix.
template <class T>
std::array<double, 5> predict_one(Wav2Shape<T>& model, const scattering::FeatureMatrix& f) {
  dataset::Samples s;
  s.frames = f.frames;
  s.paths = f.paths;
  s.features = f.values;
  s.targets.push_back({});
  return predict(model, s).front();
}

struct Quantiles {
  double p10 = 0, p25 = 0, p50 = 0, p75 = 0, p90 = 0, mean = 0;
};

/// Linear-interpolation quantiles of `v`.
inline Quantiles quantiles(std::vector<double> v) {
  Quantiles q;
  if (v.empty()) return q;
  std::sort(v.begin(), v.end());
  auto at = [&](double p) {
    const double pos = p * double(v.size() - 1);
    const std::size_t lo = std::size_t(std::floor(pos));
    const std::size_t hi = std::min(v.size() - 1, lo + 1);
    return v[lo] + (pos - double(lo)) * (v[hi] - v[lo]);
  };
  q.p10 = at(0.1);
  q.p25 = at(0.25);
  q.p50 = at(0.5);
  q.p75 = at(0.75);
  q.p90 = at(0.9);
  q.mean = std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
  return q;
}

struct Evaluation {
  std::size_t count = 0;
  double mean_distance = 0;     // Euclidean, normalized units
  double mean_sq_distance = 0;
  double mse = 0;               // per component
  std::array<Quantiles, 5> abs_error;
  std::vector<std::array<double, 5>> predictions;
};

template <class T>
Evaluation evaluate(Wav2Shape<T>& model, const dataset::Samples& s) {
  require(s.size() > 0, Errc::empty_split, "split holds no rendered entries");
  Evaluation ev;
  ev.count = s.size();
  ev.predictions = predict(model, s);
  std::array<std::vector<double>, 5> errs;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double d = euclidean(ev.predictions[i], s.targets[i]);
    ev.mean_distance += d;
    ev.mean_sq_distance += d * d;
    for (std::size_t k = 0; k < 5; ++k) errs[k].push_back(std::abs(ev.predictions[i][k] - s.targets[i][k]));
  }
  ev.mean_distance /= double(s.size());
  ev.mean_sq_distance /= double(s.size());
  ev.mse = ev.mean_sq_distance / 5.0;
  for (std::size_t k = 0; k < 5; ++k) ev.abs_error[k] = quantiles(errs[k]);
  return ev;
}

inline nlohmann::json to_json(const Evaluation& ev) {
  nlohmann::json per_dim = nlohmann::json::object();
  for (std::size_t k = 0; k < 5; ++k) {
    const auto& q = ev.abs_error[k];
    per_dim[dataset::kAxisNames[k]] = {{"mean", q.mean}, {"p10", q.p10}, {"p25", q.p25},
                                       {"p50", q.p50},   {"p75", q.p75}, {"p90", q.p90}};
  }
  return {{"count", ev.count},
          {"mean_distance", ev.mean_distance},
          {"mean_sq_distance", ev.mean_sq_distance},
          {"mse", ev.mse},
          {"abs_error", per_dim}};
}

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0;    // mean MSE over the epoch's steps
  double val_loss = 0;      // MSE
  double val_distance = 0;  // mean Euclidean distance
};

struct TrainResult {
  std::unique_ptr<Wav2Shape<float>> model;  // parameters of the best epoch
  int best_epoch = 0;
  double best_val_distance = 0;
  double best_val_loss = 0;
  std::vector<EpochRecord> history;
};

inline ModelConfig model_config_for(const TrainConfig& cfg, const dataset::Samples& s) {
  ModelConfig mc;
  mc.in_channels = s.paths;
  mc.frames = s.frames;
  mc.pooling = cfg.pooling.empty() ? default_pooling(s.frames) : cfg.pooling;
  return mc;
}

/// Adam on minibatches drawn from `train`; after every epoch the model is
/// scored on `val` and the parameters with the lowest mean validation
/// distance are kept.
inline TrainResult train(const TrainConfig& cfg, const dataset::Samples& train_set,
                         const dataset::Samples& val_set) {
  validate(cfg);
  require(train_set.size() > 0, Errc::empty_split, "training split is empty", "train");
  require(val_set.size() > 0, Errc::empty_split, "validation split is empty", "val");
  require(train_set.frames == val_set.frames && train_set.paths == val_set.paths, Errc::shape_mismatch,
          "training and validation features differ in shape");
  TrainResult res;
  res.model = std::make_unique<Wav2Shape<float>>(model_config_for(cfg, train_set), cfg.seed);
  auto& model = *res.model;
  Adam<float> opt(model.params(), {cfg.learning_rate});
  Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  shuffle(order, rng);
  std::size_t cursor = 0;
  std::vector<std::vector<float>> best;
  res.best_val_distance = INFINITY;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    double loss_sum = 0;
    for (int step = 0; step < cfg.steps_per_epoch; ++step) {
      std::vector<std::size_t> idx;
      std::vector<std::array<double, 5>> tgt;
      for (std::size_t b = 0; b < cfg.batch_size; ++b) {
        if (cursor == order.size()) {
          shuffle(order, rng);
          cursor = 0;
        }
        idx.push_back(order[cursor++]);
        tgt.push_back(train_set.targets[idx.back()]);
      }
      model.zero_grad();
      const Tensor<float> pred = model.forward(make_batch<float>(train_set, idx), true);
      Tensor<float> grad;
      const double loss = mse_loss(pred, tgt, &grad);
      if (!std::isfinite(loss))
        throw Error(Errc::diverged_loss, "training loss became " + std::to_string(loss) + " at epoch " +
                                             std::to_string(epoch) + ", step " + std::to_string(step));
      model.backward(grad);
      opt.step();
      loss_sum += loss;
    }
    const Evaluation ev = evaluate(model, val_set);
    if (!std::isfinite(ev.mean_distance))
      throw Error(Errc::diverged_loss, "validation loss became non-finite at epoch " + std::to_string(epoch));
    EpochRecord rec{epoch, loss_sum / cfg.steps_per_epoch, ev.mse, ev.mean_distance};
    res.history.push_back(rec);
    if (cfg.verbose)
      std::fprintf(stderr, "epoch %3d  train_mse %.5f  val_mse %.5f  val_distance %.4f\n", epoch,
                   rec.train_loss, rec.val_loss, rec.val_distance);
    if (ev.mean_distance < res.best_val_distance) {
      res.best_val_distance = ev.mean_distance;
      res.best_val_loss = ev.mse;
      res.best_epoch = epoch;
      best = snapshot(model);
    }
  }
  restore(model, best);
  return res;
}

inline void write_history_csv(const std::filesystem::path& path, const std::vector<EpochRecord>& h) {
  std::ofstream out(path);
  require(static_cast<bool>(out), Errc::io_error, "cannot open for writing", path.string());
  out << "epoch,train_loss,val_loss,val_distance\n";
  char line[160];
  for (const auto& r : h) {
    std::snprintf(line, sizeof line, "%d,%.9g,%.9g,%.9g\n", r.epoch, r.train_loss, r.val_loss, r.val_distance);
    out << line;
  }
}

}  // namespace hearshape::nn
