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

// Waveform reconstruction from scattering coefficients by gradient descent
// with momentum and a "bold driver" step size: grow the step by 10% after
// every improvement, retract and halve it after every regression.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include "hearshape/core/error.hpp"
#include "hearshape/core/random.hpp"
#include "hearshape/dsp/fft.hpp"
#include "hearshape/scattering/filterbank.hpp"
#include "hearshape/scattering/transform.hpp"

namespace hearshape::experiments {

struct ReconstructConfig {
  int max_iters = 300;
  double learning_rate = 0.1;  // initial mu
  double momentum = 0.9;
  double grow = 1.1;
  double shrink = 0.5;
  int max_retractions = 50;  // consecutive, before NoProgress
  std::uint64_t seed = 0;
  double tolerance = 1e-12;  // stop once E falls below tolerance * ||target||
};

struct IterationRecord {
  int iter = 0;
  double error = 0;      // E of the candidate
  double best = 0;       // E of the current accepted iterate
  double step = 0;       // mu used for the candidate
  bool accepted = false;
};

struct ReconstructResult {
  std::vector<double> waveform;  // best (last accepted) iterate
  std::vector<double> init;      // y_0
  double initial_error = 0;
  double final_error = 0;
  std::vector<IterationRecord> history;
};

/// Gaussian noise of length n whose power spectrum follows the order-1
/// coefficients: each band's mean energy sets the amplitude at its center
/// frequency, amplitudes are interpolated linearly in log-log coordinates
/// onto the FFT bins, and the result is scaled so that its order-1 energy
/// matches the target's.
inline std::vector<double> colored_noise(const scattering::ScatteringCoeffs& target,
                                         const scattering::Filterbank& fb, int N, Rng& rng) {
  const std::size_t n = fb.n_samples;
  const std::size_t J = std::size_t(fb.J);
  // Band amplitude per unit of squared filter response.
  std::vector<double> log_f, log_a;
  for (std::size_t j = J; j-- > 0;) {  // ascending frequency
    double e = 0;
    for (std::size_t t = 0; t < target.frames; ++t) e += std::pow(target.at(t, 1 + j), 2);
    e /= double(target.frames);
    double resp = 0;
    for (double v : fb.psi[j]) resp += v * v;
    log_f.push_back(std::log(fb.xi[j]));
    log_a.push_back(0.5 * std::log(std::max(e, 1e-300) / std::max(resp, 1e-300)));
  }
  fft::ComplexBuffer spec(n / 2 + 1);
  for (std::size_t k = 1; k < spec.size(); ++k) {
    const double lf = std::log(double(k) / double(n));
    double la;
    if (lf <= log_f.front()) {
      la = log_a.front();
    } else if (lf >= log_f.back()) {
      la = log_a.back();
    } else {
      const std::size_t hi = std::size_t(std::upper_bound(log_f.begin(), log_f.end(), lf) - log_f.begin());
      const double t = (lf - log_f[hi - 1]) / (log_f[hi] - log_f[hi - 1]);
      la = (1 - t) * log_a[hi - 1] + t * log_a[hi];
    }
    const double a = std::exp(la);
    spec[k] = fft::cplx(a * normal01(rng), a * normal01(rng));
  }
  spec[0] = 0.0;
  if (n % 2 == 0) spec[n / 2] = fft::cplx(spec[n / 2].real(), 0.0);
  fft::RealBuffer y;
  fft::inverse_real(spec, n, y);
  std::vector<double> out(y.begin(), y.end());

  // S is positively homogeneous, so one global gain matches order-1 energy.
  const auto s = scattering::scattering_forward(std::span<const double>(out), fb, N);
  double have = 0, want = 0;
  for (std::size_t t = 0; t < s.frames; ++t)
    for (std::size_t j = 0; j < J; ++j) {
      have += std::pow(s.at(t, 1 + j), 2);
      want += std::pow(target.at(t, 1 + j), 2);
    }
  const double gain = have > 0 ? std::sqrt(want / have) : 0.0;
  for (auto& v : out) v *= gain;
  return out;
}

namespace detail {

/// E(y) = ||S y - target|| and, when `grad` is set, its gradient.
inline double reconstruction_error(const std::vector<double>& y, const scattering::ScatteringCoeffs& target,
                                   const scattering::Filterbank& fb, int N, std::vector<double>* grad) {
  scattering::Tape tape;
  scattering::ScatteringCoeffs s =
      scattering::scattering_forward(std::span<const double>(y), fb, N, grad ? &tape : nullptr);
  for (std::size_t i = 0; i < s.values.size(); ++i) s.values[i] -= target.values[i];
  const double e = scattering::l2_norm(s);
  if (grad) {
    if (e > 0) {
      for (auto& v : s.values) v /= e;
      *grad = scattering::scattering_adjoint(tape, fb, s);
    } else {
      grad->assign(y.size(), 0.0);
    }
  }
  return e;
}

}  // namespace detail

/// Minimizes E(y) = ||S y - target|| starting from `init`. Update:
/// u_n = m u_{n-1} - mu_n grad E(y_n), y_{n+1} = y_n + u_n. A candidate
/// that raises E is discarded, mu is halved and the momentum is cleared so
/// the rejected direction is not retaken. Throws NoProgress after
/// `max_retractions` consecutive rejections; `partial`, when given, then
/// holds the run so far.
inline ReconstructResult reconstruct_from(std::vector<double> init, const scattering::ScatteringCoeffs& target,
                                          const scattering::Filterbank& fb, int N, const ReconstructConfig& cfg,
                                          ReconstructResult* partial = nullptr) {
  require(target.paths == scattering::path_table(fb.J, N) && target.frames == fb.frames(),
          Errc::shape_mismatch, "target coefficients do not match the filterbank");
  require(init.size() == fb.n_samples, Errc::length_mismatch, "initial waveform length differs from the filterbank's");
  require(cfg.max_iters >= 0, Errc::invalid_argument, "max_iters must be >= 0", "iters");
  require(cfg.learning_rate > 0, Errc::invalid_argument, "learning rate must be > 0", "learning_rate");
  require(cfg.max_retractions >= 1, Errc::invalid_argument, "max_retractions must be >= 1");

  ReconstructResult res;
  res.init = std::move(init);
  std::vector<double> y = res.init, grad, cand_grad, u(y.size(), 0.0), cand(y.size());
  double E = detail::reconstruction_error(y, target, fb, N, &grad);
  res.initial_error = E;
  res.history.push_back({0, E, E, 0.0, true});
  const double floor = cfg.tolerance * std::max(scattering::l2_norm(target), 1e-300);

  double mu = cfg.learning_rate;
  int rejected = 0;
  for (int it = 1; it <= cfg.max_iters && E > floor; ++it) {
    for (std::size_t i = 0; i < y.size(); ++i) {
      u[i] = cfg.momentum * u[i] - mu * grad[i];
      cand[i] = y[i] + u[i];
    }
    const double Ec = detail::reconstruction_error(cand, target, fb, N, &cand_grad);
    const bool accept = std::isfinite(Ec) && Ec <= E;
    res.history.push_back({it, Ec, accept ? Ec : E, mu, accept});
    if (accept) {
      y.swap(cand);
      grad.swap(cand_grad);
      E = Ec;
      mu *= cfg.grow;
      rejected = 0;
    } else {
      std::fill(u.begin(), u.end(), 0.0);
      mu *= cfg.shrink;
      if (++rejected >= cfg.max_retractions) {
        res.waveform = y;
        res.final_error = E;
        if (partial) *partial = res;
        throw Error(Errc::no_progress, std::to_string(rejected) + " consecutive retractions at iteration " +
                                           std::to_string(it) + " (E = " + std::to_string(E) + ")");
      }
    }
  }
  res.waveform = std::move(y);
  res.final_error = E;
  return res;
}

/// reconstruct_from() starting at colored_noise() seeded with cfg.seed.
inline ReconstructResult reconstruct(const scattering::ScatteringCoeffs& target,
                                     const scattering::Filterbank& fb, int N, const ReconstructConfig& cfg,
                                     ReconstructResult* partial = nullptr) {
  require(target.paths == scattering::path_table(fb.J, N) && target.frames == fb.frames(),
          Errc::shape_mismatch, "target coefficients do not match the filterbank");
  Rng rng(cfg.seed);
  return reconstruct_from(colored_noise(target, fb, N, rng), target, fb, N, cfg, partial);
}

inline void write_history_csv(const std::filesystem::path& path, const std::vector<IterationRecord>& h) {
  std::ofstream out(path);
  require(static_cast<bool>(out), Errc::io_error, "cannot open for writing", path.string());
  out << "iter,error,best,step,accepted\n";
  char line[160];
  for (const auto& r : h) {
    std::snprintf(line, sizeof line, "%d,%.12g,%.12g,%.9g,%d\n", r.iter, r.error, r.best, r.step,
                  r.accepted ? 1 : 0);
    out << line;
  }
}

}  // namespace hearshape::experiments
