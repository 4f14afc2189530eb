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

// Curvature of audio features over the strike position: the four-point
// discrete Laplacian, its norm heatmap over the membrane, and regression on
// features interpolated from the four neighbors.

#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "hearshape/core/error.hpp"
#include "hearshape/core/parallel.hpp"
#include "hearshape/dataset/grid.hpp"
#include "hearshape/dataset/render.hpp"
#include "hearshape/dsp/fft.hpp"
#include "hearshape/dsp/image.hpp"
#include "hearshape/nn/train.hpp"
#include "hearshape/scattering/filterbank.hpp"
#include "hearshape/scattering/transform.hpp"
#include "hearshape/synth/synthesize.hpp"

namespace hearshape::experiments {

enum class FeatureKind { scattering, fourier_modulus };

inline std::string to_string(FeatureKind k) {
  return k == FeatureKind::scattering ? "scattering" : "fourier_modulus";
}

inline FeatureKind feature_kind_from_string(const std::string& s) {
  if (s == "scattering") return FeatureKind::scattering;
  if (s == "fourier_modulus" || s == "fourier") return FeatureKind::fourier_modulus;
  throw Error(Errc::invalid_argument, "unknown feature kind '" + s + "'", "feature");
}

/// Fourier modulus with unitary scaling; bins other than DC and Nyquist
/// carry their mirror image, so the vector's l2 norm equals that of x.
inline std::vector<double> fourier_modulus(std::span<const double> x) {
  fft::RealBuffer in(x.begin(), x.end());
  fft::ComplexBuffer spec;
  fft::forward_real(in, spec);
  const std::size_t n = x.size();
  std::vector<double> out(spec.size());
  const double s = 1.0 / std::sqrt(double(n));
  for (std::size_t k = 0; k < spec.size(); ++k) {
    const bool unpaired = k == 0 || (n % 2 == 0 && k == n / 2);
    out[k] = std::abs(spec[k]) * s * (unpaired ? 1.0 : std::sqrt(2.0));
  }
  return out;
}

/// Synthesis and feature settings shared by every strike of a study.
struct StudyConfig {
  SynthConfig synth;
  StrikeConfig strike;  // strike_pos is overwritten per position
  int J = 8;
  int N = 2;
  unsigned threads = 0;
};

/// Feature vector of one strike. Scattering coefficients are raw (not
/// log-compressed) so both kinds live on the signal's own scale.
inline std::vector<double> strike_features(const ShapeVector& theta, std::array<double, 2> u,
                                           FeatureKind kind, const StudyConfig& cfg,
                                           const scattering::Filterbank* fb) {
  StrikeConfig strike = cfg.strike;
  strike.strike_pos = u;
  const std::vector<float> wave = synthesize(theta, strike, cfg.synth);
  const std::vector<double> x(wave.begin(), wave.end());
  if (kind == FeatureKind::fourier_modulus) return fourier_modulus(x);
  return scattering::scattering_forward(std::span<const double>(x), *fb, cfg.N).values;
}

/// The four strike neighbors in the order +u1, -u1, +u2, -u2.
inline std::array<std::array<double, 2>, 4> neighbors(std::array<double, 2> u, double delta) {
  return {{{u[0] + delta, u[1]}, {u[0] - delta, u[1]}, {u[0], u[1] + delta}, {u[0], u[1] - delta}}};
}

inline void require_inside(std::array<double, 2> u, double delta) {
  require(std::isfinite(delta) && delta >= 0, Errc::invalid_argument, "delta must be >= 0", "delta");
  for (const auto& v : neighbors(u, delta))
    for (int k = 0; k < 2; ++k)
      require(v[k] > 0 && v[k] < 1, Errc::out_of_membrane,
              "strike position +/- delta leaves the membrane", "u[" + std::to_string(k) + "]");
}

/// center - (sum of neighbors) / 4, elementwise.
inline std::vector<double> laplacian_residual(const std::vector<double>& center,
                                              const std::array<std::vector<double>, 4>& nb) {
  for (const auto& v : nb)
    require(v.size() == center.size(), Errc::length_mismatch, "neighbor features differ in size");
  std::vector<double> r(center.size());
  for (std::size_t i = 0; i < r.size(); ++i)
    r[i] = center[i] - 0.25 * (nb[0][i] + nb[1][i] + nb[2][i] + nb[3][i]);
  return r;
}

inline double l2(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

inline std::unique_ptr<scattering::Filterbank> study_filterbank(FeatureKind kind, const StudyConfig& cfg) {
  if (kind != FeatureKind::scattering) return nullptr;
  return std::make_unique<scattering::Filterbank>(scattering::build_filterbank(cfg.synth.n_samples, cfg.J));
}

/// Laplacian residual of the features at strike position u, laid out like
/// the feature vector ([frame][path] for scattering, bins for Fourier).
inline std::vector<double> discrete_laplacian(const ShapeVector& theta, std::array<double, 2> u,
                                              double delta, FeatureKind kind, const StudyConfig& cfg) {
  require_inside(u, delta);
  const auto fb = study_filterbank(kind, cfg);
  const auto center = strike_features(theta, u, kind, cfg, fb.get());
  std::array<std::vector<double>, 4> nb;
  const auto pos = neighbors(u, delta);
  for (int k = 0; k < 4; ++k) nb[k] = strike_features(theta, pos[k], kind, cfg, fb.get());
  return laplacian_residual(center, nb);
}

struct LaplacianHeatmap {
  FeatureKind kind = FeatureKind::scattering;
  double delta = 0.1;
  std::vector<double> u1, u2;  // graduations along each axis
  image::Matrix H;             // H(i, j) at (u1[i], u2[j])
};

/// Graduations delta + (i+1)(1 - 2 delta)/(res+1): the largest evenly spaced
/// interior grid whose +/- delta neighbors stay strictly inside.
inline std::vector<double> heatmap_axis(int resolution, double delta) {
  std::vector<double> u(static_cast<std::size_t>(resolution));
  for (int i = 0; i < resolution; ++i) u[i] = delta + (i + 1) * (1.0 - 2.0 * delta) / (resolution + 1);
  return u;
}

inline LaplacianHeatmap heatmap(const ShapeVector& theta, int resolution, double delta, FeatureKind kind,
                                const StudyConfig& cfg) {
  require(resolution >= 3, Errc::invalid_argument, "grid resolution must be >= 3", "resolution");
  require(delta > 0 && delta < 0.5, Errc::invalid_argument, "delta must lie in (0, 0.5)", "delta");
  validate(theta);
  LaplacianHeatmap hm;
  hm.kind = kind;
  hm.delta = delta;
  hm.u1 = heatmap_axis(resolution, delta);
  hm.u2 = hm.u1;
  hm.H = image::Matrix(std::size_t(resolution), std::size_t(resolution));
  const auto fb = study_filterbank(kind, cfg);
  const std::size_t R = std::size_t(resolution);
  parallel_for(
      R * R,
      [&](std::size_t k) {
        const std::array<double, 2> u = {hm.u1[k / R], hm.u2[k % R]};
        const auto center = strike_features(theta, u, kind, cfg, fb.get());
        std::array<std::vector<double>, 4> nb;
        const auto pos = neighbors(u, delta);
        for (int q = 0; q < 4; ++q) nb[q] = strike_features(theta, pos[q], kind, cfg, fb.get());
        hm.H(k / R, k % R) = l2(laplacian_residual(center, nb));
      },
      cfg.threads);
  return hm;
}

inline nlohmann::json to_json(const LaplacianHeatmap& hm) {
  std::vector<std::vector<double>> rows(hm.H.rows);
  for (std::size_t i = 0; i < hm.H.rows; ++i)
    rows[i].assign(hm.H.values.begin() + i * hm.H.cols, hm.H.values.begin() + (i + 1) * hm.H.cols);
  return {{"feature", to_string(hm.kind)}, {"delta", hm.delta}, {"u1", hm.u1}, {"u2", hm.u2}, {"H", rows}};
}

/// Largest |H(i,j) - H(mirror)| relative to max H, over both reflections.
inline double heatmap_asymmetry(const LaplacianHeatmap& hm) {
  const auto& H = hm.H;
  double peak = 0, diff = 0;
  for (std::size_t i = 0; i < H.rows; ++i)
    for (std::size_t j = 0; j < H.cols; ++j) {
      peak = std::max(peak, H(i, j));
      diff = std::max(diff, std::abs(H(i, j) - H(H.rows - 1 - i, j)));
      diff = std::max(diff, std::abs(H(i, j) - H(i, H.cols - 1 - j)));
    }
  return peak > 0 ? diff / peak : 0.0;
}

struct InterpolationResult {
  std::array<double, 5> target{};       // normalized theta
  std::array<double, 5> true_pred{};    // prediction from the center's own features
  std::array<double, 5> interp_pred{};  // prediction from the neighbor average
  double true_error = 0;                // squared distance
  double interp_error = 0;
};

/// Predicts theta from the center's log-scattering features and from the
/// unweighted mean of its four neighbors' log-scattering features.
inline InterpolationResult interpolate_and_predict(nn::Wav2Shape<float>& model, const dataset::GridSpec& spec,
                                                   const ShapeVector& theta, std::array<double, 2> u,
                                                   double delta, const StudyConfig& cfg, double eps,
                                                   const scattering::Filterbank& fb) {
  require_inside(u, delta);
  auto features = [&](std::array<double, 2> pos) {
    StrikeConfig strike = cfg.strike;
    strike.strike_pos = pos;
    return scattering::log_compress(scattering::scattering_forward(synthesize(theta, strike, cfg.synth), fb, cfg.N),
                                    eps);
  };
  InterpolationResult r;
  r.target = dataset::normalize_theta(theta, spec);
  const scattering::ScatteringCoeffs s = features(u);
  const auto pos = neighbors(u, delta);
  const std::array<scattering::ScatteringCoeffs, 4> nb = {features(pos[0]), features(pos[1]), features(pos[2]),
                                                          features(pos[3])};
  scattering::ScatteringCoeffs avg = s;
  // Pairwise sums keep delta = 0 exact.
  for (std::size_t i = 0; i < avg.values.size(); ++i)
    avg.values[i] = 0.25 * ((nb[0].values[i] + nb[1].values[i]) + (nb[2].values[i] + nb[3].values[i]));
  const auto center = scattering::to_float(s);
  const auto interp = scattering::to_float(avg);
  r.true_pred = nn::predict_one(model, center);
  r.interp_pred = nn::predict_one(model, interp);
  r.true_error = std::pow(nn::euclidean(r.true_pred, r.target), 2);
  r.interp_error = std::pow(nn::euclidean(r.interp_pred, r.target), 2);
  return r;
}

}  // namespace hearshape::experiments
