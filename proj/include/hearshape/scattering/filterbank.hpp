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

// One-octave (Q = 1) analytic filterbank in the frequency domain.
//
// Band-pass j is a Morlet-style wavelet: a Gaussian bump centered at
// xi_j = 0.4 * 2^-j cycles/sample with bandwidth 0.35 * xi_j, minus a scaled
// Gaussian at DC so the response vanishes at f = 0. The low-pass is a
// periodized Gaussian of std 0.3 / 2^J, so it stays a positive averaging
// kernel in time. The band-passes are then rescaled pointwise so that
//
//   sum_j |psi_j(f)|^2 + |phi(f)|^2 = 1   for 0 <= f <= 1/2,
//
// which makes the first layer a tight frame on the analytic half-axis. The
// rescaling is a common factor across j at each frequency, so the relative
// shape of the bands (and their overlap) is that of the raw Morlet family.

#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <cstddef>
#include <string>
#include <vector>

#include "hearshape/core/error.hpp"
#include "hearshape/dsp/fft.hpp"

namespace hearshape::scattering {

struct Path {
  int order = 0;
  int j1 = -1;
  int j2 = -1;
  bool operator==(const Path&) const = default;
};

inline std::string to_string(const Path& p) {
  if (p.order == 0) return "()";
  if (p.order == 1) return "(" + std::to_string(p.j1) + ")";
  return "(" + std::to_string(p.j1) + "," + std::to_string(p.j2) + ")";
}

/// Order 0, then order 1 by ascending j1, then order 2 over j2 > j1 in
/// lexicographic order.
inline std::vector<Path> path_table(int J, int N) {
  std::vector<Path> paths{{0, -1, -1}};
  for (int j1 = 0; j1 < J; ++j1) paths.push_back({1, j1, -1});
  if (N >= 2)
    for (int j1 = 0; j1 < J; ++j1)
      for (int j2 = j1 + 1; j2 < J; ++j2) paths.push_back({2, j1, j2});
  return paths;
}

struct Filterbank {
  std::size_t n_samples = 0;
  std::size_t n_padded = 0;  // FFT length L = 2 n
  std::size_t pad_left = 0;
  int J = 0;
  int Q = 1;
  std::vector<double> xi;     // center frequencies, cycles/sample
  std::vector<double> sigma;  // Gaussian widths of the raw wavelets
  double phi_sigma = 0.0;
  // Responses on bins f = 0 .. L/2 (frequency f / L). The wavelets are zero
  // on negative frequencies; phi is real and even.
  std::vector<std::vector<double>> psi;
  std::vector<double> phi;
  // Bins f in [0, L) where phi is nonzero, with phi(f) exp(2 pi i f pad_left / L).
  std::vector<std::size_t> lp_bins;
  std::vector<fft::cplx> lp_kernel;

  std::size_t hop() const { return std::size_t(1) << J; }
  std::size_t frames() const { return (n_samples + hop() - 1) / hop(); }
  std::size_t half_bins() const { return n_padded / 2 + 1; }

  /// Littlewood-Paley sum at bin f in [0, L/2].
  double littlewood_paley(std::size_t f) const {
    double s = phi[f] * phi[f];
    for (const auto& p : psi) s += p[f] * p[f];
    return s;
  }
};

inline constexpr double kXi0 = 0.4;
inline constexpr double kSigmaRatio = 0.35;
inline constexpr double kPhiWidth = 0.3;

inline Filterbank build_filterbank(std::size_t n_samples, int J, int Q = 1) {
  require(J >= 1 && J < 30, Errc::invalid_scale, "J must lie in [1, 29]", "J");
  require(Q == 1, Errc::invalid_argument, "only Q = 1 is supported", "Q");
  require(fft::is_power_of_two(n_samples), Errc::invalid_argument,
          "n_samples must be a power of two", "n_samples");
  require((std::size_t(1) << J) <= n_samples, Errc::invalid_scale,
          "2^J exceeds the signal length", "J");
  require(n_samples >= 2, Errc::invalid_argument, "n_samples must be >= 2", "n_samples");

  Filterbank fb;
  fb.n_samples = n_samples;
  fb.n_padded = 2 * n_samples;
  fb.pad_left = n_samples / 2;
  fb.J = J;
  fb.Q = Q;
  const std::size_t L = fb.n_padded;
  const std::size_t H = fb.half_bins();

  fb.phi_sigma = kPhiWidth / double(std::size_t(1) << J);
  fb.phi.assign(H, 0.0);
  auto gauss = [](double f, double s) { return std::exp(-0.5 * f * f / (s * s)); };
  for (std::size_t k = 0; k < H; ++k) {
    const double f = double(k) / double(L);
    double v = 0.0;
    for (int r = -2; r <= 2; ++r) v += gauss(f + r, fb.phi_sigma);
    fb.phi[k] = v;
  }
  const double phi0 = fb.phi[0];
  for (auto& v : fb.phi) v /= phi0;
  for (std::size_t f = 0; f < L; ++f) {
    const double ph = fb.phi[f <= L / 2 ? f : L - f];
    if (ph == 0.0) continue;
    const double angle = 2.0 * std::numbers::pi * double((f * fb.pad_left) % L) / double(L);
    fb.lp_bins.push_back(f);
    fb.lp_kernel.push_back(ph * std::polar(1.0, angle));
  }

  fb.psi.assign(std::size_t(J), std::vector<double>(H, 0.0));
  for (int j = 0; j < J; ++j) {
    const double xi = kXi0 / double(std::size_t(1) << j);
    const double s = kSigmaRatio * xi;
    fb.xi.push_back(xi);
    fb.sigma.push_back(s);
    const double kappa = gauss(xi, s);
    for (std::size_t k = 1; k < H; ++k) {
      const double f = double(k) / double(L);
      fb.psi[j][k] = gauss(f - xi, s) - kappa * gauss(f, s);
    }
  }

  for (std::size_t k = 1; k < H; ++k) {
    double band = 0.0;
    for (int j = 0; j < J; ++j) band += fb.psi[j][k] * fb.psi[j][k];
    const double room = std::max(0.0, 1.0 - fb.phi[k] * fb.phi[k]);
    const double gain = band > 0 ? std::sqrt(room / band) : 0.0;
    for (int j = 0; j < J; ++j) fb.psi[j][k] *= gain;
  }
  return fb;
}

}  // namespace hearshape::scattering
