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

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "hearshape/nn/adam.hpp"
#include "hearshape/nn/checkpoint.hpp"
#include "hearshape/nn/layers.hpp"
#include "hearshape/nn/model.hpp"
#include "hearshape/nn/train.hpp"

namespace hearshape::nn {
namespace {

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("hearshape_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

Tensor<double> random_tensor(std::vector<std::size_t> shape, std::uint64_t seed, double scale = 1.0) {
  Tensor<double> t(std::move(shape));
  Rng rng(seed);
  for (auto& v : t.data) v = scale * normal01(rng);
  return t;
}

double dot(const Tensor<double>& a, const Tensor<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.data[i] * b.data[i];
  return s;
}

// Loss L = <w, f(x)>; compares analytic gradients against central
// differences for the input and for every parameter entry.
template <class Forward, class Backward>
void check_gradients(Forward fwd, Backward bwd, Tensor<double>& x, std::vector<Tensor<double>*> params,
                     std::uint64_t seed, double tol = 1e-6) {
  const Tensor<double> y0 = fwd(x);
  const Tensor<double> w = random_tensor(y0.shape, seed);
  for (auto* p : params) p->zero_grad();
  const Tensor<double> gx = bwd(w);
  const double h = 1e-6;
  auto numeric = [&](double& v) {
    const double keep = v;
    v = keep + h;
    const double lp = dot(w, fwd(x));
    v = keep - h;
    const double lm = dot(w, fwd(x));
    v = keep;
    return (lp - lm) / (2 * h);
  };
  double err = 0, ref = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double n = numeric(x.data[i]);
    err = std::max(err, std::abs(n - gx.data[i]));
    ref = std::max(ref, std::abs(n));
  }
  EXPECT_LT(err, tol * std::max(1.0, ref)) << "input gradient";
  for (auto* p : params) {
    double perr = 0, pref = 0;
    for (std::size_t i = 0; i < p->size(); ++i) {
      const double n = numeric(p->data[i]);
      perr = std::max(perr, std::abs(n - p->grad[i]));
      pref = std::max(pref, std::abs(n));
    }
    EXPECT_LT(perr, tol * std::max(1.0, pref)) << p->name;
  }
}

TEST(Layers, Conv1dGradient) {
  Conv1d<double> conv("c", 3, 4, 8);
  Rng rng(1);
  conv.init(rng, 6.0);
  Tensor<double> x = random_tensor({2, 3, 11}, 2);
  check_gradients([&](const Tensor<double>& v) { return conv.forward(v, true); },
                  [&](const Tensor<double>& g) { return conv.backward(g); }, x, conv.params(), 3);
}

TEST(Layers, Conv1dSamePaddingMatchesDirectSum) {
  Conv1d<double> conv("c", 1, 1, 8);
  auto* w = conv.params()[0];
  for (std::size_t k = 0; k < 8; ++k) w->data[k] = double(k + 1);
  conv.params()[1]->data[0] = 0.5;
  Tensor<double> x({1, 1, 10});
  for (std::size_t t = 0; t < 10; ++t) x.data[t] = double(t) - 3.0;
  const Tensor<double> y = conv.forward(x, false);
  ASSERT_EQ(y.shape, (std::vector<std::size_t>{1, 1, 10}));
  for (int t = 0; t < 10; ++t) {
    double s = 0.5;
    for (int k = 0; k < 8; ++k) {
      const int src = t + k - 3;
      if (src >= 0 && src < 10) s += double(k + 1) * x.data[std::size_t(src)];
    }
    EXPECT_DOUBLE_EQ(y.data[std::size_t(t)], s) << t;
  }
}

TEST(Layers, BatchNormGradient3d) {
  BatchNorm<double> bn("bn", 3);
  bn.params()[0]->data = {1.3, 0.7, -0.4};
  bn.params()[1]->data = {0.1, -0.2, 0.3};
  Tensor<double> x = random_tensor({4, 3, 5}, 4, 2.0);
  check_gradients([&](const Tensor<double>& v) { return bn.forward(v, true); },
                  [&](const Tensor<double>& g) { return bn.backward(g); }, x, bn.params(), 5);
}

TEST(Layers, BatchNormGradient2d) {
  BatchNorm<double> bn("bn", 6);
  Tensor<double> x = random_tensor({5, 6}, 6);
  check_gradients([&](const Tensor<double>& v) { return bn.forward(v, true); },
                  [&](const Tensor<double>& g) { return bn.backward(g); }, x, bn.params(), 7);
}

TEST(Layers, BatchNormStatistics) {
  BatchNorm<double> bn("bn", 2);
  Tensor<double> x = random_tensor({8, 2, 16}, 8, 3.0);
  for (std::size_t i = 0; i < x.size(); ++i) x.data[i] += 5.0;
  const Tensor<double> y = bn.forward(x, true);
  for (std::size_t c = 0; c < 2; ++c) {
    double s = 0, q = 0, xs = 0, xq = 0;
    const double n = 8 * 16;
    for (std::size_t b = 0; b < 8; ++b)
      for (std::size_t t = 0; t < 16; ++t) {
        const std::size_t i = (b * 2 + c) * 16 + t;
        s += y.data[i];
        q += y.data[i] * y.data[i];
        xs += x.data[i];
        xq += x.data[i] * x.data[i];
      }
    EXPECT_NEAR(s / n, 0.0, 1e-12);
    EXPECT_NEAR(q / n, 1.0, 1e-3);
    const double mean = xs / n;
    const double unbiased = (xq - n * mean * mean) / (n - 1);
    const auto buffers = bn.buffers();
    EXPECT_NEAR(buffers[0]->data[c], 0.1 * mean, 1e-12);
    EXPECT_NEAR(buffers[1]->data[c], 0.9 + 0.1 * unbiased, 1e-9);
  }
  // Evaluation mode normalizes with the running statistics.
  const Tensor<double> e = bn.forward(x, false);
  const auto buffers = bn.buffers();
  const double expect = (x.data[0] - buffers[0]->data[0]) / std::sqrt(buffers[1]->data[0] + 1e-5);
  EXPECT_NEAR(e.data[0], expect, 1e-12);
}

TEST(Layers, BatchNormRunningStatisticsConverge) {
  // On a constant stream the running statistics approach the batch ones,
  // so evaluation mode reproduces training mode.
  BatchNorm<double> bn("bn", 3);
  const Tensor<double> x = random_tensor({6, 3, 20}, 16, 4.0);
  Tensor<double> train_out;
  for (int i = 0; i < 300; ++i) train_out = bn.forward(x, true);
  const Tensor<double> eval_out = bn.forward(x, false);
  // The running variance is unbiased, so it exceeds the batch one by n/(n-1).
  const double shrink = std::sqrt(119.0 / 120.0);
  double err = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    err = std::max(err, std::abs(shrink * train_out.data[i] - eval_out.data[i]));
  EXPECT_LT(err, 1e-5);
}

TEST(Layers, PoolReluDenseGradients) {
  AvgPool1d<double> pool(3);
  Tensor<double> x = random_tensor({2, 2, 9}, 9);
  check_gradients([&](const Tensor<double>& v) { return pool.forward(v, true); },
                  [&](const Tensor<double>& g) { return pool.backward(g); }, x, {}, 10);

  ReLU<double> relu;
  Tensor<double> r = random_tensor({3, 7}, 11);
  for (auto& v : r.data)
    if (std::abs(v) < 1e-3) v = 0.1;
  check_gradients([&](const Tensor<double>& v) { return relu.forward(v, true); },
                  [&](const Tensor<double>& g) { return relu.backward(g); }, r, {}, 12);

  Dense<double> dense("d", 7, 4);
  Rng rng(13);
  dense.init(rng, 6.0, 0.25);
  Tensor<double> d = random_tensor({3, 7}, 14);
  check_gradients([&](const Tensor<double>& v) { return dense.forward(v, true); },
                  [&](const Tensor<double>& g) { return dense.backward(g); }, d, dense.params(), 15);
}

ModelConfig small_config() {
  ModelConfig c;
  c.in_channels = 3;
  c.frames = 16;
  c.filters = 4;
  c.hidden = 6;
  c.pooling = {2, 2, 2, 1};
  return c;
}

TEST(Model, FullNetworkGradient) {
  Wav2Shape<double> model(small_config(), 21);
  Tensor<double> x = random_tensor({4, 3, 16}, 22);
  check_gradients([&](const Tensor<double>& v) { return model.forward(v, true); },
                  [&](const Tensor<double>& g) { return model.backward(g); }, x, model.params(), 23,
                  1e-5);
}

TEST(Model, DefaultPoolingSchedules) {
  EXPECT_EQ(default_pooling(512), (std::vector<int>{4, 4, 4, 4}));
  EXPECT_EQ(default_pooling(128), (std::vector<int>{4, 4, 4, 2}));
  EXPECT_EQ(default_pooling(32), (std::vector<int>{4, 4, 2, 1}));
  EXPECT_EQ(default_pooling(8), (std::vector<int>{4, 2, 1, 1}));
  EXPECT_EQ(default_pooling(2), (std::vector<int>{2, 1, 1, 1}));
  EXPECT_EQ(default_pooling(1), (std::vector<int>{1, 1, 1, 1}));
  for (std::size_t frames : {128u, 32u, 8u, 2u}) {
    ModelConfig c;
    c.frames = frames;
    c.pooling = default_pooling(frames);
    EXPECT_EQ(c.flattened_time(), 1u) << frames;
  }
}

TEST(Model, OutputShapeAtEveryScale) {
  for (std::size_t frames : {128u, 32u, 8u, 2u}) {
    ModelConfig c;
    c.frames = frames;
    c.pooling = default_pooling(frames);
    Wav2Shape<float> model(c, 1);
    Tensor<float> x({3, 37, frames}, 0.25f);
    const auto y = model.forward(x, true);
    EXPECT_EQ(y.shape, (std::vector<std::size_t>{3, 5})) << frames;
  }
}

TEST(Model, RejectsMismatchedInput) {
  Wav2Shape<float> model(ModelConfig{}, 0);
  Tensor<float> x({2, 36, 128});
  try {
    model.forward(x, false);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::shape_mismatch);
  }
  ModelConfig bad;
  bad.pooling = {4, 4, 4, 3};
  EXPECT_THROW(Wav2Shape<float>(bad, 0), Error);
}

TEST(Model, SeededInitializationIsDeterministic) {
  Wav2Shape<float> a(ModelConfig{}, 7), b(ModelConfig{}, 7), c(ModelConfig{}, 8);
  EXPECT_EQ(snapshot(a), snapshot(b));
  EXPECT_NE(snapshot(a), snapshot(c));
}

TEST(Model, ZeroInputGivesFiniteOutput) {
  Wav2Shape<float> model(ModelConfig{}, 3);
  Tensor<float> x({4, 37, 128});
  for (bool train : {true, false}) {
    const auto y = model.forward(x, train);
    for (float v : y.data) EXPECT_TRUE(std::isfinite(v));
  }
}

dataset::Samples synthetic_samples(std::size_t count, std::size_t paths, std::size_t frames,
                                   std::uint64_t seed) {
  // Each target component is a smooth function of the mean of a band of
  // paths, so the mapping is learnable by the network.
  dataset::Samples s;
  s.frames = frames;
  s.paths = paths;
  Rng rng(seed);
  for (std::size_t i = 0; i < count; ++i) {
    std::array<double, 5> t;
    for (auto& v : t) v = uniform01(rng);
    for (std::size_t f = 0; f < frames; ++f)
      for (std::size_t p = 0; p < paths; ++p) {
        const double level = t[p % 5] * std::exp(-double(f) / double(frames));
        s.features.push_back(float(level + 0.05 * normal01(rng)));
      }
    s.targets.push_back(t);
    s.ids.push_back(i);
  }
  return s;
}

TEST(Model, UntrainedDistanceNearCubeCenterBaseline) {
  // Predictions start near 0.5; the mean distance from the cube center to
  // a uniform point in [0,1]^5 is about 0.63.
  Wav2Shape<float> model(ModelConfig{}, 11);
  const auto s = synthetic_samples(200, 37, 128, 12);
  // Evaluation uses running statistics; warm them up as training would.
  for (int i = 0; i < 20; ++i) {
    std::vector<std::size_t> idx;
    for (std::size_t k = 0; k < 32; ++k) idx.push_back((i * 32 + k) % s.size());
    model.forward(make_batch<float>(s, idx), true);
  }
  const Evaluation ev = evaluate(model, s);
  EXPECT_GT(ev.mean_distance, 0.4);
  EXPECT_LT(ev.mean_distance, 1.3);
}

TEST(Train, LearnsSyntheticMapping) {
  const auto train_set = synthetic_samples(512, 10, 16, 31);
  const auto val_set = synthetic_samples(128, 10, 16, 32);
  TrainConfig cfg;
  cfg.batch_size = 32;
  cfg.epochs = 8;
  cfg.steps_per_epoch = 40;
  cfg.seed = 5;
  const TrainResult res = train(cfg, train_set, val_set);
  ASSERT_EQ(res.history.size(), 8u);
  EXPECT_LT(res.history.back().train_loss, res.history.front().train_loss);
  EXPECT_LT(res.best_val_distance, 0.35);
  double best = INFINITY;
  for (const auto& r : res.history) best = std::min(best, r.val_distance);
  EXPECT_EQ(res.best_val_distance, best);
  // The returned model carries the best epoch's parameters.
  const Evaluation ev = evaluate(*res.model, val_set);
  EXPECT_NEAR(ev.mean_distance, res.best_val_distance, 1e-9);
}

TEST(Train, DeterministicForSeed) {
  const auto train_set = synthetic_samples(64, 5, 8, 41);
  const auto val_set = synthetic_samples(16, 5, 8, 42);
  TrainConfig cfg;
  cfg.batch_size = 8;
  cfg.epochs = 2;
  cfg.steps_per_epoch = 5;
  cfg.seed = 9;
  const auto a = train(cfg, train_set, val_set);
  const auto b = train(cfg, train_set, val_set);
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    EXPECT_EQ(a.history[i].train_loss, b.history[i].train_loss);
    EXPECT_EQ(a.history[i].val_distance, b.history[i].val_distance);
  }
}

TEST(Train, CheckpointBytesAreReproducible) {
  const auto dir = scratch("ckpt_repro");
  const auto train_set = synthetic_samples(64, 5, 8, 43);
  const auto val_set = synthetic_samples(16, 5, 8, 44);
  TrainConfig cfg;
  cfg.batch_size = 8;
  cfg.epochs = 2;
  cfg.steps_per_epoch = 4;
  cfg.seed = 3;
  for (const char* stem : {"a", "b"}) {
    const auto res = train(cfg, train_set, val_set);
    save_checkpoint(dir / stem, *res.model, {{"train", to_json(cfg)}});
  }
  auto bytes = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  };
  EXPECT_EQ(bytes(dir / "a.bin"), bytes(dir / "b.bin"));
  EXPECT_EQ(bytes(dir / "a.json"), bytes(dir / "b.json"));
}

TEST(Train, NonFiniteLossRaisesDivergedLoss) {
  auto train_set = synthetic_samples(16, 5, 8, 51);
  const auto val_set = synthetic_samples(4, 5, 8, 52);
  for (auto& v : train_set.features) v = NAN;
  TrainConfig cfg;
  cfg.batch_size = 4;
  cfg.epochs = 1;
  cfg.steps_per_epoch = 1;
  try {
    train(cfg, train_set, val_set);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::diverged_loss);
  }
}

TEST(Train, EmptySplits) {
  const auto some = synthetic_samples(4, 5, 8, 61);
  dataset::Samples none;
  TrainConfig cfg;
  try {
    train(cfg, some, none);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::empty_split);
  }
  Wav2Shape<float> model(small_config(), 0);
  try {
    evaluate(model, none);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::empty_split);
  }
}

TEST(Train, QuantilesInterpolate) {
  const Quantiles q = quantiles({4, 1, 3, 2, 5});
  EXPECT_DOUBLE_EQ(q.p50, 3.0);
  EXPECT_DOUBLE_EQ(q.p25, 2.0);
  EXPECT_DOUBLE_EQ(q.p10, 1.4);
  EXPECT_DOUBLE_EQ(q.mean, 3.0);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  Tensor<float> w({3}, 1.0f);
  w.grad = {2.0f, -0.5f, 0.0f};
  Adam<float> opt({&w}, {0.01});
  opt.step();
  // Bias-corrected first step is lr * sign(g) for nonzero g.
  EXPECT_NEAR(w.data[0], 0.99f, 1e-6);
  EXPECT_NEAR(w.data[1], 1.01f, 1e-6);
  EXPECT_FLOAT_EQ(w.data[2], 1.0f);
}

TEST(Adam, MinimizesQuadratic) {
  Tensor<double> w({2});
  w.data = {3.0, -2.0};
  Adam<double> opt({&w}, {0.05});
  for (int i = 0; i < 2000; ++i) {
    w.grad = {2 * (w.data[0] - 1.0), 2 * (w.data[1] + 0.5)};
    opt.step();
  }
  EXPECT_NEAR(w.data[0], 1.0, 1e-3);
  EXPECT_NEAR(w.data[1], -0.5, 1e-3);
}

TEST(Checkpoint, RoundTripPreservesPredictions) {
  const auto dir = scratch("ckpt");
  Wav2Shape<float> model(ModelConfig{}, 17);
  const auto s = synthetic_samples(8, 37, 128, 18);
  std::vector<std::size_t> idx{0, 1, 2, 3, 4, 5, 6, 7};
  model.forward(make_batch<float>(s, idx), true);  // moves running statistics
  save_checkpoint(dir / "model", model, {{"note", "test"}});
  EXPECT_TRUE(std::filesystem::exists(dir / "model.bin"));
  EXPECT_TRUE(std::filesystem::exists(dir / "model.json"));

  const Checkpoint ck = load_checkpoint(dir / "model.json");
  EXPECT_EQ(ck.header.at("format"), kCheckpointFormat);
  EXPECT_EQ(ck.header.at("note"), "test");
  EXPECT_EQ(snapshot(model), snapshot(*ck.model));
  const auto a = model.forward(make_batch<float>(s, idx), false);
  const auto b = ck.model->forward(make_batch<float>(s, idx), false);
  EXPECT_EQ(a.data, b.data);
}

TEST(Checkpoint, TruncatedBlobIsRejected) {
  const auto dir = scratch("ckpt_trunc");
  Wav2Shape<float> model(small_config(), 1);
  save_checkpoint(dir / "m", model, {});
  std::filesystem::resize_file(dir / "m.bin", 10);
  EXPECT_THROW(load_checkpoint(dir / "m"), Error);
  EXPECT_THROW(load_checkpoint(dir / "missing"), Error);
}

}  // namespace
}  // namespace hearshape::nn
