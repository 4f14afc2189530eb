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
#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "hearshape/core/error.hpp"
#include "hearshape/synth/excitation.hpp"
#include "hearshape/synth/modal.hpp"
#include "hearshape/synth/shape.hpp"

namespace hearshape {

struct SynthConfig {
  std::size_t n_samples = std::size_t(1) << 15;
  double sample_rate = 22050.0;
  int M = 10;
  bool peak_normalize = false;
};

struct SynthDiagnostics {
  std::size_t modes_total = 0;
  std::size_t modes_rendered = 0;   // nonzero weight, below Nyquist
  std::size_t modes_aliased = 0;    // dropped: carrier above Nyquist
};

/// Sum of weight[m] * exp(-sigma_m t) * sin(omega_m t) at t = k / fs, in
/// double precision. Each mode is generated by a complex rotation that is
/// re-anchored to the exact exponential every 256 samples, so the error does
/// not grow with the signal length.
inline std::vector<double> render_modes(const ModalGrid& grid, const std::vector<double>& weights,
                                        std::size_t n_samples, double sample_rate,
                                        SynthDiagnostics* diag = nullptr) {
  require(weights.size() == grid.size(), Errc::length_mismatch,
          "weight array does not match the modal grid");
  require(sample_rate > 0 && std::isfinite(sample_rate), Errc::invalid_argument,
          "sample_rate must be > 0", "sample_rate");
  constexpr std::size_t kAnchor = 256;
  const double nyquist = 0.5 * sample_rate;
  const double dt = 1.0 / sample_rate;
  std::vector<double> out(n_samples, 0.0);
  SynthDiagnostics d;
  d.modes_total = grid.size();
  for (std::size_t m = 0; m < grid.size(); ++m) {
    const double sigma = grid.sigma[m];
    const double omega = grid.omega_m[m];
    if (omega / (2.0 * std::numbers::pi) > nyquist) {
      ++d.modes_aliased;
      continue;
    }
    const double w = weights[m];
    if (w == 0.0) continue;
    ++d.modes_rendered;
    const std::complex<double> step = std::exp(std::complex<double>(-sigma * dt, omega * dt));
    for (std::size_t k0 = 0; k0 < n_samples; k0 += kAnchor) {
      const double t0 = double(k0) * dt;
      std::complex<double> z = std::exp(std::complex<double>(-sigma * t0, omega * t0));
      const std::size_t k1 = std::min(n_samples, k0 + kAnchor);
      for (std::size_t k = k0; k < k1; ++k) {
        out[k] += w * z.imag();
        z *= step;
      }
    }
  }
  require(d.modes_aliased < d.modes_total, Errc::all_modes_aliased,
          "every mode lies above the Nyquist frequency", "omega");
  if (diag) *diag = d;
  return out;
}

/// Renders the drum sound for shape `theta` struck and picked up as
/// described by `strike`. Output is float32 with exactly n_samples entries.
inline std::vector<float> synthesize(const ShapeVector& theta, const StrikeConfig& strike,
                                     const SynthConfig& config = {},
                                     SynthDiagnostics* diag = nullptr) {
  require(config.n_samples >= 1, Errc::invalid_argument, "n_samples must be >= 1", "n_samples");
  const ModalGrid grid = modal_grid(theta, config.M);
  const std::vector<double> weights = spatial_weights(strike, config.M, theta.alpha);
  std::vector<double> wave = render_modes(grid, weights, config.n_samples, config.sample_rate, diag);
  double gain = 1.0;
  if (config.peak_normalize) {
    double peak = 0.0;
    for (double v : wave) peak = std::max(peak, std::abs(v));
    if (peak > 0) gain = 1.0 / peak;
  }
  std::vector<float> out(wave.size());
  for (std::size_t k = 0; k < wave.size(); ++k) out[k] = static_cast<float>(gain * wave[k]);
  return out;
}

}  // namespace hearshape
