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

// Layers of the regression network, each with a hand-written backward pass.
// Activations are laid out [batch, channels, time] (or [batch, features]
// after flattening). A layer caches what its backward pass needs during a
// training-mode forward call.

#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "hearshape/core/error.hpp"
#include "hearshape/core/random.hpp"
#include "hearshape/nn/tensor.hpp"

namespace hearshape::nn {

template <class T>
class Layer {
 public:
  virtual ~Layer() = default;
  virtual Tensor<T> forward(const Tensor<T>& x, bool train) = 0;
  /// Accumulates parameter gradients and returns the input gradient.
  virtual Tensor<T> backward(const Tensor<T>& grad_out) = 0;
  virtual std::vector<Tensor<T>*> params() { return {}; }
  /// Non-trainable state that belongs in a checkpoint.
  virtual std::vector<Tensor<T>*> buffers() { return {}; }
};

/// Uniform(-a, a) with a = sqrt(gain / fan_in).
template <class T>
void init_uniform(Tensor<T>& t, std::size_t fan_in, double gain, Rng& rng) {
  const double a = std::sqrt(gain / double(fan_in));
  for (auto& v : t.data) v = T((2.0 * uniform01(rng) - 1.0) * a);
}

template <class T>
class Conv1d : public Layer<T> {
 public:
  Conv1d(std::string name, std::size_t in, std::size_t out, std::size_t kernel)
      : in_(in), out_(out), k_(kernel), pad_left_((kernel - 1) / 2) {
    w_ = Tensor<T>({out, in, kernel});
    w_.name = name + ".weight";
    b_ = Tensor<T>({out});
    b_.name = name + ".bias";
  }
  void init(Rng& rng, double gain) { init_uniform(w_, in_ * k_, gain, rng); }

  Tensor<T> forward(const Tensor<T>& x, bool train) override {
    require(x.shape.size() == 3 && x.dim(1) == in_, Errc::shape_mismatch, "conv1d input channels");
    const std::size_t B = x.dim(0), L = x.dim(2);
    Tensor<T> y({B, out_, L});
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t o = 0; o < out_; ++o) {
        T* yo = &y.data[(b * out_ + o) * L];
        std::fill(yo, yo + L, b_.data[o]);
        for (std::size_t i = 0; i < in_; ++i) {
          const T* xi = &x.data[(b * in_ + i) * L];
          const T* w = &w_.data[(o * in_ + i) * k_];
          for (std::size_t k = 0; k < k_; ++k) {
            // y[t] += w[k] x[t + k - pad_left]
            const long shift = long(k) - long(pad_left_);
            const std::size_t t0 = shift < 0 ? std::size_t(-shift) : 0;
            const std::size_t t1 = shift > 0 ? (L > std::size_t(shift) ? L - std::size_t(shift) : 0) : L;
            const T wk = w[k];
            for (std::size_t t = t0; t < t1; ++t) yo[t] += wk * xi[long(t) + shift];
          }
        }
      }
    if (train) x_ = x;
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) override {
    const std::size_t B = x_.dim(0), L = x_.dim(2);
    w_.ensure_grad();
    b_.ensure_grad();
    Tensor<T> gx({B, in_, L});
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t o = 0; o < out_; ++o) {
        const T* g = &gy.data[(b * out_ + o) * L];
        T acc = 0;
        for (std::size_t t = 0; t < L; ++t) acc += g[t];
        b_.grad[o] += acc;
        for (std::size_t i = 0; i < in_; ++i) {
          const T* xi = &x_.data[(b * in_ + i) * L];
          T* gxi = &gx.data[(b * in_ + i) * L];
          const T* w = &w_.data[(o * in_ + i) * k_];
          T* gw = &w_.grad[(o * in_ + i) * k_];
          for (std::size_t k = 0; k < k_; ++k) {
            const long shift = long(k) - long(pad_left_);
            const std::size_t t0 = shift < 0 ? std::size_t(-shift) : 0;
            const std::size_t t1 = shift > 0 ? (L > std::size_t(shift) ? L - std::size_t(shift) : 0) : L;
            const T wk = w[k];
            T s = 0;
            for (std::size_t t = t0; t < t1; ++t) {
              s += g[t] * xi[long(t) + shift];
              gxi[long(t) + shift] += wk * g[t];
            }
            gw[k] += s;
          }
        }
      }
    return gx;
  }

  std::vector<Tensor<T>*> params() override { return {&w_, &b_}; }

 private:
  std::size_t in_, out_, k_, pad_left_;
  Tensor<T> w_, b_, x_;
};

/// Batch normalization over (batch, time) per channel, or over batch per
/// feature for 2-d input.
template <class T>
class BatchNorm : public Layer<T> {
 public:
  BatchNorm(std::string name, std::size_t channels, double eps = 1e-5, double momentum = 0.1)
      : c_(channels), eps_(eps), momentum_(momentum) {
    gamma_ = Tensor<T>({channels}, T(1));
    gamma_.name = name + ".gamma";
    beta_ = Tensor<T>({channels});
    beta_.name = name + ".beta";
    mean_ = Tensor<T>({channels});
    mean_.name = name + ".running_mean";
    var_ = Tensor<T>({channels}, T(1));
    var_.name = name + ".running_var";
  }

  Tensor<T> forward(const Tensor<T>& x, bool train) override {
    require(x.shape.size() >= 2 && x.dim(1) == c_, Errc::shape_mismatch, "batch-norm channels");
    const std::size_t B = x.dim(0), L = x.shape.size() == 3 ? x.dim(2) : 1;
    const std::size_t n = B * L;
    Tensor<T> y(x.shape);
    if (train) {
      xhat_ = Tensor<T>(x.shape);
      inv_std_.assign(c_, 0.0);
    }
    for (std::size_t c = 0; c < c_; ++c) {
      double mean, var;
      if (train) {
        double s = 0;
        for (std::size_t b = 0; b < B; ++b)
          for (std::size_t t = 0; t < L; ++t) s += x.data[(b * c_ + c) * L + t];
        mean = s / double(n);
        double q = 0;
        for (std::size_t b = 0; b < B; ++b)
          for (std::size_t t = 0; t < L; ++t) {
            const double d = x.data[(b * c_ + c) * L + t] - mean;
            q += d * d;
          }
        var = q / double(n);
        const double unbiased = n > 1 ? q / double(n - 1) : var;
        mean_.data[c] = T((1 - momentum_) * double(mean_.data[c]) + momentum_ * mean);
        var_.data[c] = T((1 - momentum_) * double(var_.data[c]) + momentum_ * unbiased);
      } else {
        mean = mean_.data[c];
        var = var_.data[c];
      }
      const double inv = 1.0 / std::sqrt(var + eps_);
      if (train) inv_std_[c] = inv;
      for (std::size_t b = 0; b < B; ++b)
        for (std::size_t t = 0; t < L; ++t) {
          const std::size_t idx = (b * c_ + c) * L + t;
          const T xh = T((double(x.data[idx]) - mean) * inv);
          if (train) xhat_.data[idx] = xh;
          y.data[idx] = gamma_.data[c] * xh + beta_.data[c];
        }
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) override {
    const std::size_t B = xhat_.dim(0), L = xhat_.shape.size() == 3 ? xhat_.dim(2) : 1;
    const double n = double(B * L);
    gamma_.ensure_grad();
    beta_.ensure_grad();
    Tensor<T> gx(xhat_.shape);
    for (std::size_t c = 0; c < c_; ++c) {
      double sg = 0, sgx = 0;
      for (std::size_t b = 0; b < B; ++b)
        for (std::size_t t = 0; t < L; ++t) {
          const std::size_t idx = (b * c_ + c) * L + t;
          sg += gy.data[idx];
          sgx += double(gy.data[idx]) * xhat_.data[idx];
        }
      gamma_.grad[c] += T(sgx);
      beta_.grad[c] += T(sg);
      const double k = double(gamma_.data[c]) * inv_std_[c];
      for (std::size_t b = 0; b < B; ++b)
        for (std::size_t t = 0; t < L; ++t) {
          const std::size_t idx = (b * c_ + c) * L + t;
          gx.data[idx] = T(k * (double(gy.data[idx]) - sg / n - double(xhat_.data[idx]) * sgx / n));
        }
    }
    return gx;
  }

  std::vector<Tensor<T>*> params() override { return {&gamma_, &beta_}; }
  std::vector<Tensor<T>*> buffers() override { return {&mean_, &var_}; }

 private:
  std::size_t c_;
  double eps_, momentum_;
  Tensor<T> gamma_, beta_, mean_, var_, xhat_;
  std::vector<double> inv_std_;
};

template <class T>
class ReLU : public Layer<T> {
 public:
  Tensor<T> forward(const Tensor<T>& x, bool train) override {
    Tensor<T> y(x.shape);
    // NaN passes through so a diverging run surfaces in the loss.
    for (std::size_t i = 0; i < x.size(); ++i) y.data[i] = x.data[i] < T(0) ? T(0) : x.data[i];
    if (train) mask_ = y;
    return y;
  }
  Tensor<T> backward(const Tensor<T>& gy) override {
    Tensor<T> gx(gy.shape);
    for (std::size_t i = 0; i < gy.size(); ++i) gx.data[i] = mask_.data[i] > T(0) ? gy.data[i] : T(0);
    return gx;
  }

 private:
  Tensor<T> mask_;
};

/// Non-overlapping average pooling along time; trailing samples that do not
/// fill a window are dropped.
template <class T>
class AvgPool1d : public Layer<T> {
 public:
  explicit AvgPool1d(std::size_t k) : k_(k) {}
  Tensor<T> forward(const Tensor<T>& x, bool train) override {
    const std::size_t B = x.dim(0), C = x.dim(1), L = x.dim(2), Lo = L / k_;
    require(Lo >= 1, Errc::shape_mismatch, "pooling window longer than the time axis");
    Tensor<T> y({B, C, Lo});
    for (std::size_t r = 0; r < B * C; ++r)
      for (std::size_t t = 0; t < Lo; ++t) {
        T s = 0;
        for (std::size_t k = 0; k < k_; ++k) s += x.data[r * L + t * k_ + k];
        y.data[r * Lo + t] = s / T(k_);
      }
    if (train) in_shape_ = x.shape;
    return y;
  }
  Tensor<T> backward(const Tensor<T>& gy) override {
    Tensor<T> gx(in_shape_);
    const std::size_t L = in_shape_[2], Lo = L / k_;
    for (std::size_t r = 0; r < in_shape_[0] * in_shape_[1]; ++r)
      for (std::size_t t = 0; t < Lo; ++t)
        for (std::size_t k = 0; k < k_; ++k) gx.data[r * L + t * k_ + k] = gy.data[r * Lo + t] / T(k_);
    return gx;
  }

 private:
  std::size_t k_;
  std::vector<std::size_t> in_shape_;
};

template <class T>
class Flatten : public Layer<T> {
 public:
  Tensor<T> forward(const Tensor<T>& x, bool train) override {
    Tensor<T> y = x;
    y.shape = {x.dim(0), x.size() / x.dim(0)};
    if (train) in_shape_ = x.shape;
    return y;
  }
  Tensor<T> backward(const Tensor<T>& gy) override {
    Tensor<T> gx = gy;
    gx.shape = in_shape_;
    return gx;
  }

 private:
  std::vector<std::size_t> in_shape_;
};

template <class T>
class Dense : public Layer<T> {
 public:
  Dense(std::string name, std::size_t in, std::size_t out) : in_(in), out_(out) {
    w_ = Tensor<T>({out, in});
    w_.name = name + ".weight";
    b_ = Tensor<T>({out});
    b_.name = name + ".bias";
  }
  void init(Rng& rng, double gain, T bias = T(0)) {
    init_uniform(w_, in_, gain, rng);
    std::fill(b_.data.begin(), b_.data.end(), bias);
  }

  Tensor<T> forward(const Tensor<T>& x, bool train) override {
    require(x.shape.size() == 2 && x.dim(1) == in_, Errc::shape_mismatch, "dense input width");
    const std::size_t B = x.dim(0);
    Tensor<T> y({B, out_});
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t o = 0; o < out_; ++o) {
        T s = b_.data[o];
        const T* w = &w_.data[o * in_];
        const T* xb = &x.data[b * in_];
        for (std::size_t i = 0; i < in_; ++i) s += w[i] * xb[i];
        y.data[b * out_ + o] = s;
      }
    if (train) x_ = x;
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) override {
    const std::size_t B = x_.dim(0);
    w_.ensure_grad();
    b_.ensure_grad();
    Tensor<T> gx({B, in_});
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t o = 0; o < out_; ++o) {
        const T g = gy.data[b * out_ + o];
        b_.grad[o] += g;
        T* gw = &w_.grad[o * in_];
        const T* w = &w_.data[o * in_];
        const T* xb = &x_.data[b * in_];
        T* gxb = &gx.data[b * in_];
        for (std::size_t i = 0; i < in_; ++i) {
          gw[i] += g * xb[i];
          gxb[i] += g * w[i];
        }
      }
    return gx;
  }

  std::vector<Tensor<T>*> params() override { return {&w_, &b_}; }

 private:
  std::size_t in_, out_;
  Tensor<T> w_, b_, x_;
};

}  // namespace hearshape::nn
