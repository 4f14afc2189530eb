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
#include <numbers>
#include <random>

#include "hearshape/scattering/feature_io.hpp"
#include "hearshape/scattering/filterbank.hpp"
#include "hearshape/scattering/transform.hpp"
#include "hearshape/synth/synthesize.hpp"
#include "oracles.hpp"

namespace hearshape::scattering {
namespace {

std::vector<double> noise(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, 1.0);
  std::vector<double> x(n);
  for (auto& v : x) v = d(rng);
  return x;
}

double norm(const std::vector<double>& v) {
  double a = 0;
  for (double x : v) a += x * x;
  return std::sqrt(a);
}

double rel_l2(const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0, den = 0;
  for (std::size_t i = 0; i < a.size(); ++i) num += (a[i] - b[i]) * (a[i] - b[i]), den += b[i] * b[i];
  return std::sqrt(num / den);
}

std::vector<double> drum(std::size_t n = 1 << 15) {
  SynthConfig cfg;
  cfg.n_samples = n;
  const auto x = synthesize(ShapeVector{}, {}, cfg);
  return {x.begin(), x.end()};
}

TEST(Filterbank, PaperConfiguration) {
  const Filterbank fb = build_filterbank(1 << 15, 8);
  EXPECT_EQ(fb.psi.size(), 8u);
  EXPECT_EQ(fb.frames(), 128u);
  EXPECT_EQ(fb.n_padded, 1u << 16);
  EXPECT_EQ(path_table(8, 2).size(), 37u);
  EXPECT_EQ(build_filterbank(1 << 10, 1).psi.size(), 1u);
}

TEST(Filterbank, InvalidScale) {
  try {
    build_filterbank(1 << 8, 9);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::invalid_scale);
  }
  EXPECT_THROW(build_filterbank(1000, 3), Error);
}

TEST(Filterbank, NullAverageAndLittlewoodPaley) {
  for (int J : {1, 5, 8, 12}) {
    const Filterbank fb = build_filterbank(1 << 15, J);
    for (const auto& p : fb.psi) EXPECT_EQ(p[0], 0.0);
    EXPECT_EQ(fb.phi[0], 1.0);
    for (std::size_t f = 0; f < fb.half_bins(); ++f) {
      const double lp = fb.littlewood_paley(f);
      ASSERT_GE(lp, 0.8) << f;
      ASSERT_LE(lp, 1.0 + 1e-12) << f;
    }
  }
}

TEST(Filterbank, LowpassIsPositiveInTime) {
  const Filterbank fb = build_filterbank(1 << 9, 4);
  const auto tf = oracle::time_filters(fb);
  for (double v : tf.phi) EXPECT_GT(v, -1e-15);
}

TEST(PathTable, Order) {
  const auto p = path_table(3, 2);
  ASSERT_EQ(p.size(), 7u);
  EXPECT_EQ(p[0], (Path{0, -1, -1}));
  EXPECT_EQ(p[1], (Path{1, 0, -1}));
  EXPECT_EQ(p[3], (Path{1, 2, -1}));
  EXPECT_EQ(p[4], (Path{2, 0, 1}));
  EXPECT_EQ(p[5], (Path{2, 0, 2}));
  EXPECT_EQ(p[6], (Path{2, 1, 2}));
}

TEST(Scalogram, ZeroInZeroOut) {
  const Filterbank fb = build_filterbank(1 << 12, 6);
  const auto U = scalogram(std::vector<double>(1 << 12, 0.0), fb);
  for (double v : U.values) EXPECT_EQ(v, 0.0);
  EXPECT_THROW(scalogram(std::vector<double>(100, 0.0), fb), Error);
}

TEST(Scalogram, SinusoidAtCenterFrequencyConcentrates) {
  const std::size_t n = 1 << 15;
  const Filterbank fb = build_filterbank(n, 8);
  for (int j = 0; j < 8; ++j) {
    std::vector<double> x(n);
    for (std::size_t t = 0; t < n; ++t) x[t] = std::cos(2 * std::numbers::pi * fb.xi[j] * double(t));
    const auto U = scalogram(x, fb);
    std::vector<double> e(8, 0.0);
    for (std::size_t t = 0; t < n; ++t)
      for (int k = 0; k < 8; ++k) e[k] += U(t, k) * U(t, k);
    const double total = std::accumulate(e.begin(), e.end(), 0.0);
    EXPECT_GE(e[j] / total, 0.8) << "scale " << j;
  }
}

TEST(Scattering, PolarityAndGain) {
  const Filterbank fb = build_filterbank(1 << 12, 6);
  auto x = noise(1 << 12, 1);
  const auto s = scattering_forward(x, fb, 2);
  std::vector<double> neg(x), twice(x), scaled(x);
  for (auto& v : neg) v = -v;
  for (auto& v : twice) v *= 2;
  for (auto& v : scaled) v *= 0.37;
  EXPECT_EQ(scattering_forward(neg, fb, 2).values, s.values);
  const auto s2 = scattering_forward(twice, fb, 2);
  const auto s3 = scattering_forward(scaled, fb, 2);
  for (std::size_t i = 0; i < s.values.size(); ++i) {
    EXPECT_EQ(s2.values[i], 2 * s.values[i]);
    EXPECT_NEAR(s3.values[i], 0.37 * s.values[i], 1e-12 * l2_norm(s));
  }
}

TEST(Scattering, ZeroSignalAndNonnegative) {
  const Filterbank fb = build_filterbank(1 << 12, 6);
  for (double v : scattering_forward(std::vector<double>(1 << 12, 0.0), fb, 2).values) EXPECT_EQ(v, 0.0);
  for (double v : scattering_forward(noise(1 << 12, 2), fb, 2).values) EXPECT_GE(v, 0.0);
}

TEST(Scattering, FirstOrderUnaffectedBySecond) {
  const Filterbank fb = build_filterbank(1 << 12, 6);
  const auto x = noise(1 << 12, 3);
  const auto s1 = scattering_forward(x, fb, 1), s2 = scattering_forward(x, fb, 2);
  ASSERT_EQ(s1.n_paths(), 7u);
  ASSERT_EQ(s2.n_paths(), 22u);
  for (std::size_t k = 0; k < s1.frames; ++k)
    for (std::size_t p = 0; p < s1.n_paths(); ++p) EXPECT_EQ(s1.at(k, p), s2.at(k, p));
}

TEST(Scattering, MatchesBruteForceConvolution) {
  const std::size_t n = 1 << 10;
  {
    const Filterbank fb = build_filterbank(n, 8);
    const auto tf = oracle::time_filters(fb);
    std::vector<double> x(n, 0.0);
    x[n / 2] = 1.0;
    const auto s = scattering_forward(x, fb, 2);
    EXPECT_LT(rel_l2(s.values, oracle::brute_force_scattering(x, fb, tf, 2)), 1e-6);
  }
  {
    const Filterbank fb = build_filterbank(n, 5);
    const auto tf = oracle::time_filters(fb);
    const auto x = noise(n, 4);
    const auto s = scattering_forward(x, fb, 2);
    EXPECT_LT(rel_l2(s.values, oracle::brute_force_scattering(x, fb, tf, 2)), 1e-6);
  }
}

double pairing(const ScatteringCoeffs& g, const ScatteringCoeffs& s) {
  double a = 0;
  for (std::size_t i = 0; i < s.values.size(); ++i) a += g.values[i] * s.values[i];
  return a;
}

TEST(Adjoint, MatchesFiniteDifferences) {
  const std::size_t n = 1 << 10;
  for (auto [J, N] : {std::pair{5, 2}, std::pair{8, 2}, std::pair{4, 1}}) {
    const Filterbank fb = build_filterbank(n, J);
    const auto x = noise(n, 10 + J), v = noise(n, 20 + J);
    Tape tape;
    ScatteringCoeffs g = scattering_forward(x, fb, N, &tape);
    const auto gv = noise(g.values.size(), 30 + J);
    g.values = gv;
    const auto grad = scattering_adjoint(tape, fb, g);
    double analytic = 0;
    for (std::size_t i = 0; i < n; ++i) analytic += grad[i] * v[i];
    const double h = 1e-4;
    std::vector<double> xp(x), xm(x);
    for (std::size_t i = 0; i < n; ++i) xp[i] += h * v[i], xm[i] -= h * v[i];
    const double fd = (pairing(g, scattering_forward(xp, fb, N)) - pairing(g, scattering_forward(xm, fb, N))) /
                      (2 * h);
    EXPECT_LT(std::abs(analytic - fd), 1e-4 * std::abs(fd)) << "J=" << J << " N=" << N;
  }
}

TEST(Adjoint, DotProductWithExactTangent) {
  const std::size_t n = 1 << 8;
  const Filterbank fb = build_filterbank(n, 4);
  const auto tf = oracle::time_filters(fb);
  const auto x = noise(n, 41), v = noise(n, 42);
  std::vector<double> jvp;
  oracle::brute_force_scattering(x, fb, tf, 2, &v, &jvp);
  Tape tape;
  ScatteringCoeffs w = scattering_forward(x, fb, 2, &tape);
  w.values = noise(w.values.size(), 43);
  const auto vjp = scattering_adjoint(tape, fb, w);
  double lhs = 0, rhs = 0;
  for (std::size_t i = 0; i < jvp.size(); ++i) lhs += jvp[i] * w.values[i];
  for (std::size_t i = 0; i < n; ++i) rhs += v[i] * vjp[i];
  EXPECT_LT(std::abs(lhs - rhs), 1e-6 * std::abs(lhs));
}

TEST(Adjoint, ZeroCotangentAndStationaryPoint) {
  const Filterbank fb = build_filterbank(1 << 10, 5);
  const auto x = noise(1 << 10, 5);
  Tape tape;
  ScatteringCoeffs s = scattering_forward(x, fb, 2, &tape);
  const ScatteringCoeffs target = s;
  for (std::size_t i = 0; i < s.values.size(); ++i) s.values[i] = 2 * (s.values[i] - target.values[i]);
  for (double v : scattering_adjoint(tape, fb, s)) EXPECT_EQ(v, 0.0);
  ScatteringCoeffs bad = s;
  bad.values.pop_back();
  EXPECT_THROW(scattering_adjoint(tape, fb, bad), Error);
}

TEST(Invariance, NonexpansiveAndEnergyBound) {
  const std::size_t n = 1 << 12;
  const Filterbank fb = build_filterbank(n, 8);
  for (int i = 0; i < 10; ++i) {
    const auto x = noise(n, 100 + i), y = noise(n, 200 + i);
    std::vector<double> d(n);
    for (std::size_t k = 0; k < n; ++k) d[k] = x[k] - y[k];
    const auto sx = scattering_forward(x, fb, 2), sy = scattering_forward(y, fb, 2);
    EXPECT_LE(l2_distance(sx, sy), 1.05 * norm(d));
    EXPECT_LE(l2_norm(sx), 1.05 * norm(x));
  }
  const auto x = drum(), y = [] {
    SynthConfig cfg;
    const auto w = synthesize(ShapeVector::from_hz(180, 0.3, 0.02, 0.03, 0.6), {}, cfg);
    return std::vector<double>(w.begin(), w.end());
  }();
  const Filterbank big = build_filterbank(1 << 15, 8);
  std::vector<double> d(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) d[k] = x[k] - y[k];
  EXPECT_LE(l2_distance(scattering_forward(x, big, 2), scattering_forward(y, big, 2)), 1.05 * norm(d));
  EXPECT_LE(l2_norm(scattering_forward(x, big, 2)), 1.05 * norm(x));
  EXPECT_LE(l2_norm(scattering_forward(y, big, 2)), 1.05 * norm(y));
}

TEST(Invariance, SmallShift) {
  const Filterbank fb = build_filterbank(1 << 15, 8);
  const auto x = drum();
  std::vector<double> shifted(x.size());
  for (std::size_t t = 0; t < x.size(); ++t) shifted[(t + 16) % x.size()] = x[t];
  const auto a = scattering_forward(x, fb, 2), b = scattering_forward(shifted, fb, 2);
  EXPECT_LT(l2_distance(a, b) / l2_norm(a), 0.1);
}

TEST(LogCompress, Basics) {
  const Filterbank fb = build_filterbank(1 << 10, 4);
  const auto s = scattering_forward(noise(1 << 10, 6), fb, 2);
  const auto l = log_compress(s, 1e-3);
  for (std::size_t i = 0; i < s.values.size(); ++i) EXPECT_DOUBLE_EQ(l.values[i], std::log1p(s.values[i] / 1e-3));
  EXPECT_EQ(log_compress(empty_coeffs(fb, 2), 1e-1).values, empty_coeffs(fb, 2).values);
  EXPECT_THROW(log_compress(s, 0.0), Error);
}

TEST(FeatureIo, RoundTrip) {
  const Filterbank fb = build_filterbank(1 << 12, 6);
  const auto s = log_compress(scattering_forward(noise(1 << 12, 7), fb, 2), 1e-3);
  FeatureMeta meta{1 << 12, 22050.0, 6, 1, 2, 1e-3, s.frames, s.paths};
  const auto dir = std::filesystem::temp_directory_path() / "hearshape_feature_io";
  std::filesystem::create_directories(dir);
  write_features(dir / "x", to_float(s), meta);
  FeatureMeta back;
  const auto m = read_features(dir / "x", &back);
  EXPECT_EQ(m.values, to_float(s).values);
  EXPECT_EQ(back.paths, s.paths);
  EXPECT_EQ(back.J, 6);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace hearshape::scattering
