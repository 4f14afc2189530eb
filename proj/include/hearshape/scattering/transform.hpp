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

// Time scattering of orders 0-2 and its adjoint.
//
// The signal is reflect-padded to L = 2n and every convolution is circular
// on that grid. Wavelet outputs are kept at full resolution; only the final
// low-pass is subsampled, by 2^J, at padded times pad_left + k 2^J. The
// subsampled low-pass is computed exactly by folding the spectrum onto
// L / 2^J bins.
//
// Order 0 is |x * phi| rather than x * phi, so that every coefficient is
// nonnegative and S(-x) = S(x) holds exactly. Taking the modulus after the
// low-pass (not before) keeps the first layer inside the frame bound.
// Coefficients are scaled by sqrt(2^J) so that ||S x|| is directly
// comparable with ||x||.

#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "hearshape/core/error.hpp"
#include "hearshape/dsp/fft.hpp"
#include "hearshape/dsp/image.hpp"
#include "hearshape/scattering/filterbank.hpp"

namespace hearshape::scattering {

using fft::cplx;

/// Coefficients stored row-major as [frame][path].
struct ScatteringCoeffs {
  std::size_t frames = 0;
  std::vector<Path> paths;
  std::vector<double> values;
  std::size_t frame_hop = 0;

  std::size_t n_paths() const { return paths.size(); }
  double& at(std::size_t frame, std::size_t path) { return values[frame * paths.size() + path]; }
  double at(std::size_t frame, std::size_t path) const {
    return values[frame * paths.size() + path];
  }
};

inline double l2_norm(const ScatteringCoeffs& s) {
  double acc = 0.0;
  for (double v : s.values) acc += v * v;
  return std::sqrt(acc);
}

inline double l2_distance(const ScatteringCoeffs& a, const ScatteringCoeffs& b) {
  require(a.values.size() == b.values.size(), Errc::shape_mismatch,
          "coefficient arrays differ in size");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    const double d = a.values[i] - b.values[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

/// Intermediate values of one forward pass, needed by the adjoint.
struct Tape {
  std::vector<double> order0;          // x * phi at the output frames, signed
  std::vector<fft::ComplexBuffer> w1;  // x * psi_j1, per j1
  std::vector<fft::ComplexBuffer> w2;  // |x * psi_j1| * psi_j2, per order-2 path
  int N = 0;
};

namespace detail {

/// Reflect padding without edge repetition: x[p], ..., x[1], x[0..n-1],
/// x[n-2], ... Returns the source index of padded sample i.
inline std::size_t pad_source(std::size_t i, std::size_t n, std::size_t pad_left) {
  long k = long(i) - long(pad_left);
  const long period = 2 * (long(n) - 1);
  if (period == 0) return 0;
  k %= period;
  if (k < 0) k += period;
  if (k >= long(n)) k = period - k;
  return std::size_t(k);
}

inline void pad(std::span<const double> x, const Filterbank& fb, fft::RealBuffer& out) {
  out.resize(fb.n_padded);
  for (std::size_t i = 0; i < fb.n_padded; ++i)
    out[i] = x[pad_source(i, fb.n_samples, fb.pad_left)];
}

/// Full-length complex spectrum value at bin f from a one-sided spectrum of
/// a real signal.
inline cplx full_bin(const fft::ComplexBuffer& half, std::size_t f, std::size_t L) {
  return f <= L / 2 ? half[f] : std::conj(half[L - f]);
}

/// Applies phi to a real signal given by its one-sided spectrum and samples
/// the result at pad_left + k 2^J, k < frames, times sqrt(2^J). Writes the
/// samples into column `path` of `out`.
inline void lowpass_subsample(const fft::ComplexBuffer& spec, const Filterbank& fb,
                              ScatteringCoeffs& out, std::size_t path) {
  const std::size_t L = fb.n_padded;
  const std::size_t hop = fb.hop();
  const std::size_t Lp = L / hop;
  fft::ComplexBuffer folded(Lp, cplx(0.0, 0.0)), res;
  for (std::size_t i = 0; i < fb.lp_bins.size(); ++i) {
    const std::size_t f = fb.lp_bins[i];
    folded[f % Lp] += full_bin(spec, f, L) * fb.lp_kernel[i];
  }
  fft::inverse(folded, res);
  const double scale = std::sqrt(double(hop)) * double(Lp) / double(L);
  for (std::size_t k = 0; k < out.frames; ++k) out.at(k, path) = scale * res[k].real();
}

/// Adjoint of lowpass_subsample: adds the one-sided spectrum of the gradient
/// with respect to the (real) input signal into `acc`.
inline void lowpass_subsample_adjoint(const ScatteringCoeffs& grad, std::size_t path,
                                      const Filterbank& fb, fft::ComplexBuffer& acc,
                                      const std::vector<double>* sign = nullptr) {
  const std::size_t L = fb.n_padded;
  const std::size_t hop = fb.hop();
  const std::size_t Lp = L / hop;
  fft::ComplexBuffer g(Lp, cplx(0.0, 0.0)), G;
  for (std::size_t k = 0; k < grad.frames; ++k) {
    g[k] = grad.at(k, path);
    if (sign) {
      const double y = (*sign)[k];
      g[k] = y > 0 ? g[k] : (y < 0 ? -g[k] : cplx(0.0, 0.0));
    }
  }
  fft::forward(g, G);
  const double c = std::sqrt(double(hop));
  for (std::size_t i = 0; i < fb.lp_bins.size(); ++i) {
    const std::size_t f = fb.lp_bins[i];
    if (f > L / 2) break;
    acc[f] += c * std::conj(fb.lp_kernel[i]) * G[f % Lp];
  }
}

/// w = v * psi_j on the full complex grid, from the one-sided spectrum of v.
inline void wavelet(const fft::ComplexBuffer& spec, const std::vector<double>& psi,
                    std::size_t L, fft::ComplexBuffer& w) {
  fft::ComplexBuffer prod(L, cplx(0.0, 0.0));
  for (std::size_t f = 0; f <= L / 2; ++f) prod[f] = spec[f] * psi[f];
  fft::inverse(prod, w);
}

/// Given dF/dw for complex w = v * psi (as dF/dRe + i dF/dIm), adds the
/// one-sided spectrum of dF/dv into `acc`.
inline void wavelet_adjoint(const fft::ComplexBuffer& grad_w, const std::vector<double>& psi,
                            std::size_t L, fft::ComplexBuffer& acc) {
  fft::ComplexBuffer G;
  fft::forward(grad_w, G);
  // Real part of ifft(G psi); psi lives on [0, L/2], so the Hermitian
  // half-spectrum is half the product, real at DC and Nyquist.
  acc[0] += (G[0] * psi[0]).real();
  for (std::size_t f = 1; f < L / 2; ++f) acc[f] += 0.5 * G[f] * psi[f];
  acc[L / 2] += (G[L / 2] * psi[L / 2]).real();
}

inline void modulus(const fft::ComplexBuffer& w, fft::RealBuffer& u) {
  u.resize(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) u[i] = std::abs(w[i]);
}

/// Gradient through u = |w|, with the zero-modulus subgradient set to 0.
inline void modulus_adjoint(const fft::ComplexBuffer& w, const fft::RealBuffer& grad_u,
                            fft::ComplexBuffer& grad_w) {
  grad_w.resize(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double a = std::abs(w[i]);
    grad_w[i] = a > 0 ? grad_u[i] * w[i] / a : cplx(0.0, 0.0);
  }
}

}  // namespace detail

inline ScatteringCoeffs empty_coeffs(const Filterbank& fb, int N) {
  ScatteringCoeffs s;
  s.frames = fb.frames();
  s.paths = path_table(fb.J, N);
  s.values.assign(s.frames * s.paths.size(), 0.0);
  s.frame_hop = fb.hop();
  return s;
}

/// |x * psi_j| for every scale, on the unpadded time axis: rows are time
/// samples, columns are scales.
inline image::Matrix scalogram(std::span<const double> x, const Filterbank& fb) {
  require(x.size() == fb.n_samples, Errc::length_mismatch,
          "signal length does not match the filterbank");
  const std::size_t L = fb.n_padded;
  fft::RealBuffer xp;
  detail::pad(x, fb, xp);
  fft::ComplexBuffer X, w;
  fft::forward_real(xp, X);
  image::Matrix U(fb.n_samples, std::size_t(fb.J));
  for (int j = 0; j < fb.J; ++j) {
    detail::wavelet(X, fb.psi[j], L, w);
    for (std::size_t t = 0; t < fb.n_samples; ++t) U(t, j) = std::abs(w[fb.pad_left + t]);
  }
  return U;
}

inline ScatteringCoeffs scattering_forward(std::span<const double> x, const Filterbank& fb,
                                           int N, Tape* tape = nullptr) {
  require(x.size() == fb.n_samples, Errc::length_mismatch,
          "signal length does not match the filterbank");
  require(N == 1 || N == 2, Errc::invalid_argument, "N must be 1 or 2", "N");
  const std::size_t L = fb.n_padded;
  ScatteringCoeffs out = empty_coeffs(fb, N);

  fft::RealBuffer xp, u;
  detail::pad(x, fb, xp);
  fft::ComplexBuffer X, spec, w;
  fft::forward_real(xp, X);

  detail::lowpass_subsample(X, fb, out, 0);
  if (tape) {
    tape->order0.resize(out.frames);
    for (std::size_t k = 0; k < out.frames; ++k) tape->order0[k] = out.at(k, 0);
    tape->w1.assign(std::size_t(fb.J), {});
    tape->w2.clear();
    tape->N = N;
  }
  for (std::size_t k = 0; k < out.frames; ++k) out.at(k, 0) = std::abs(out.at(k, 0));

  std::size_t path2 = 1 + std::size_t(fb.J);
  fft::ComplexBuffer w2;
  fft::RealBuffer u2;
  fft::ComplexBuffer spec2;
  for (int j1 = 0; j1 < fb.J; ++j1) {
    detail::wavelet(X, fb.psi[j1], L, w);
    detail::modulus(w, u);
    fft::forward_real(u, spec);
    detail::lowpass_subsample(spec, fb, out, 1 + std::size_t(j1));
    if (tape) tape->w1[j1] = w;
    if (N < 2) continue;
    for (int j2 = j1 + 1; j2 < fb.J; ++j2) {
      detail::wavelet(spec, fb.psi[j2], L, w2);
      detail::modulus(w2, u2);
      fft::forward_real(u2, spec2);
      detail::lowpass_subsample(spec2, fb, out, path2++);
      if (tape) tape->w2.push_back(w2);
    }
  }
  return out;
}

inline ScatteringCoeffs scattering_forward(const std::vector<float>& x, const Filterbank& fb,
                                           int N, Tape* tape = nullptr) {
  std::vector<double> xd(x.begin(), x.end());
  return scattering_forward(std::span<const double>(xd), fb, N, tape);
}

/// Gradient of <grad_S, S(x)> with respect to x, from a tape recorded by
/// scattering_forward at x.
inline std::vector<double> scattering_adjoint(const Tape& tape, const Filterbank& fb,
                                              const ScatteringCoeffs& grad_S) {
  const int N = tape.N;
  const std::vector<Path> expected = path_table(fb.J, N);
  require(grad_S.paths == expected && grad_S.frames == fb.frames() &&
              grad_S.values.size() == grad_S.frames * expected.size(),
          Errc::shape_mismatch, "cotangent does not match the scattering output");
  require(tape.order0.size() == fb.frames() && tape.w1.size() == std::size_t(fb.J),
          Errc::shape_mismatch, "tape does not match the filterbank");
  const std::size_t L = fb.n_padded;
  const std::size_t H = fb.half_bins();

  // One-sided spectrum of dF/dx_padded, excluding the order-0 branch.
  fft::ComplexBuffer acc_x(H, cplx(0.0, 0.0));
  fft::ComplexBuffer acc_u(H), grad_w;
  fft::RealBuffer grad_u, u;
  std::size_t path2 = 1 + std::size_t(fb.J);
  std::size_t w2_index = 0;
  for (int j1 = 0; j1 < fb.J; ++j1) {
    std::fill(acc_u.begin(), acc_u.end(), cplx(0.0, 0.0));
    detail::lowpass_subsample_adjoint(grad_S, 1 + std::size_t(j1), fb, acc_u);
    if (N >= 2) {
      for (int j2 = j1 + 1; j2 < fb.J; ++j2) {
        const fft::ComplexBuffer& w2 = tape.w2.at(w2_index++);
        fft::ComplexBuffer acc2(H, cplx(0.0, 0.0));
        detail::lowpass_subsample_adjoint(grad_S, path2++, fb, acc2);
        fft::inverse_real(acc2, L, grad_u);
        detail::modulus_adjoint(w2, grad_u, grad_w);
        detail::wavelet_adjoint(grad_w, fb.psi[j2], L, acc_u);
      }
    }
    fft::inverse_real(acc_u, L, grad_u);
    detail::modulus_adjoint(tape.w1[j1], grad_u, grad_w);
    detail::wavelet_adjoint(grad_w, fb.psi[j1], L, acc_x);
  }

  // Order 0: |x_padded * phi| at the output frames.
  detail::lowpass_subsample_adjoint(grad_S, 0, fb, acc_x, &tape.order0);

  fft::RealBuffer grad_xp;
  fft::inverse_real(acc_x, L, grad_xp);

  std::vector<double> grad(fb.n_samples, 0.0);
  for (std::size_t i = 0; i < L; ++i)
    grad[detail::pad_source(i, fb.n_samples, fb.pad_left)] += grad_xp[i];
  return grad;
}

/// rho(S) = log(1 + S / eps), elementwise.
inline ScatteringCoeffs log_compress(const ScatteringCoeffs& s, double eps) {
  require(eps > 0 && std::isfinite(eps), Errc::invalid_argument, "eps must be > 0", "eps");
  ScatteringCoeffs out = s;
  for (auto& v : out.values) v = std::log1p(v / eps);
  return out;
}

}  // namespace hearshape::scattering
