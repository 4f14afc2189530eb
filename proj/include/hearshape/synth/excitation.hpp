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

// Spatial part of the excitation: sine-series coefficients of the strike
// profile, multiplied by the mode shapes evaluated at the pickup.
//
// Coordinates are normalized to the unit square. The first axis spans the
// long side (length 1), the second the short side (length alpha), so a
// physically round Gaussian of width w has normalized widths (w, w/alpha).

#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "hearshape/core/error.hpp"
#include "hearshape/dsp/fft.hpp"

namespace hearshape {

enum class SpatialProfile { gaussian, dirac };
enum class TemporalExcitation { dirac };

struct StrikeConfig {
  std::array<double, 2> strike_pos = {0.5, 0.5};
  std::array<double, 2> pickup_pos = {0.5, 0.5};
  double spatial_width = 0.4;  // Gaussian std, fraction of the long side
  SpatialProfile profile = SpatialProfile::gaussian;
  TemporalExcitation temporal = TemporalExcitation::dirac;
};

/// The strike must lie strictly inside the membrane. The pickup may sit on
/// the rim, where every mode shape vanishes.
inline void validate(const StrikeConfig& s) {
  for (int k = 0; k < 2; ++k) {
    const std::string axis = "[" + std::to_string(k) + "]";
    require(std::isfinite(s.strike_pos[k]) && s.strike_pos[k] > 0 && s.strike_pos[k] < 1,
            Errc::out_of_membrane, "strike position must lie in (0, 1)", "strike_pos" + axis);
    require(std::isfinite(s.pickup_pos[k]) && s.pickup_pos[k] >= 0 && s.pickup_pos[k] <= 1,
            Errc::out_of_membrane, "pickup position must lie in [0, 1]", "pickup_pos" + axis);
  }
  require(std::isfinite(s.spatial_width) && s.spatial_width > 0, Errc::invalid_argument,
          "spatial_width must be > 0", "spatial_width");
}

namespace detail {

/// For each of `count` real sequences of length n (stride `stride` between
/// consecutive samples, `dist` between sequences) computes the midpoint sine
/// sums  sum_j f[j] sin(pi k (j + 1/2) / n)  for k = 1..K, using one FFT of
/// length 2n per sequence.
inline void midpoint_sine_sums(const double* f, std::size_t n, std::size_t stride,
                               std::size_t count, std::size_t dist, int K, double* out) {
  fft::ComplexBuffer buf(2 * n), spec(2 * n);
  for (std::size_t s = 0; s < count; ++s) {
    for (std::size_t j = 0; j < n; ++j) buf[j] = f[s * dist + j * stride];
    for (std::size_t j = n; j < 2 * n; ++j) buf[j] = 0.0;
    fft::forward(buf, spec);
    for (int k = 1; k <= K; ++k) {
      const double phase = -std::numbers::pi * k / (2.0 * double(n));
      const fft::cplx z = std::polar(1.0, phase) * spec[std::size_t(k) % (2 * n)];
      out[s * K + (k - 1)] = -z.imag();
    }
  }
}

}  // namespace detail

inline constexpr std::size_t kSineGrid = 256;

/// Sine-series coefficients c[m1-1][m2-1] of the strike profile on the unit
/// square, with basis sin(m1 pi u1) sin(m2 pi u2) and normalization
/// c = 4 * integral(profile * basis). The Gaussian has unit peak.
inline std::vector<double> strike_coefficients(const StrikeConfig& strike, int M, double alpha) {
  validate(strike);
  require(M >= 1, Errc::invalid_argument, "M must be >= 1", "M");
  require(alpha > 0 && alpha <= 1, Errc::invalid_argument, "alpha must lie in (0, 1]", "alpha");
  std::vector<double> coef(std::size_t(M) * M);
  const auto [s1, s2] = strike.strike_pos;

  if (strike.profile == SpatialProfile::dirac) {
    for (int m1 = 1; m1 <= M; ++m1)
      for (int m2 = 1; m2 <= M; ++m2)
        coef[std::size_t(m1 - 1) * M + (m2 - 1)] =
            4.0 * std::sin(m1 * std::numbers::pi * s1) * std::sin(m2 * std::numbers::pi * s2);
    return coef;
  }

  const std::size_t n = kSineGrid;
  require(std::size_t(M) < 2 * n, Errc::invalid_argument, "M too large for the sine grid", "M");
  const double w1 = strike.spatial_width;
  const double w2 = strike.spatial_width / alpha;
  std::vector<double> field(n * n);  // field[i1 * n + i2]
  for (std::size_t i1 = 0; i1 < n; ++i1) {
    const double x1 = (double(i1) + 0.5) / double(n);
    const double g1 = -0.5 * (x1 - s1) * (x1 - s1) / (w1 * w1);
    for (std::size_t i2 = 0; i2 < n; ++i2) {
      const double x2 = (double(i2) + 0.5) / double(n);
      field[i1 * n + i2] = std::exp(g1 - 0.5 * (x2 - s2) * (x2 - s2) / (w2 * w2));
    }
  }
  // Transform along u2 for every row, then along u1 for every retained m2.
  std::vector<double> rows(n * std::size_t(M));  // rows[i1 * M + (m2-1)]
  detail::midpoint_sine_sums(field.data(), n, 1, n, n, M, rows.data());
  std::vector<double> cols(std::size_t(M) * M);  // cols[(m2-1) * M + (m1-1)]
  detail::midpoint_sine_sums(rows.data(), n, M, M, 1, M, cols.data());
  const double scale = 4.0 / double(n * n);
  for (int m1 = 1; m1 <= M; ++m1)
    for (int m2 = 1; m2 <= M; ++m2)
      coef[std::size_t(m1 - 1) * M + (m2 - 1)] = scale * cols[std::size_t(m2 - 1) * M + (m1 - 1)];
  return coef;
}

/// Per-mode output weights: strike coefficient times the mode shape at the
/// pickup. Row-major over (m1 - 1, m2 - 1), matching ModalGrid.
inline std::vector<double> spatial_weights(const StrikeConfig& strike, int M, double alpha) {
  std::vector<double> w = strike_coefficients(strike, M, alpha);
  const auto [p1, p2] = strike.pickup_pos;
  for (int m1 = 1; m1 <= M; ++m1) {
    const double a = std::sin(m1 * std::numbers::pi * p1);
    for (int m2 = 1; m2 <= M; ++m2) {
      double& v = w[std::size_t(m1 - 1) * M + (m2 - 1)];
      v *= a * std::sin(m2 * std::numbers::pi * p2);
      // sin(k pi) is ~1e-16, not 0; snap modes with a node at the pickup.
      if (p1 == 0 || p1 == 1 || p2 == 0 || p2 == 1) v = 0.0;
    }
  }
  return w;
}

}  // namespace hearshape
