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

#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "hearshape/core/error.hpp"

namespace hearshape {

/// Perceptual description of a rectangular drum.
///
///   omega  fundamental angular frequency, rad/s
///   tau    decay time of the fundamental, s
///   p      frequency-dependent damping ("roundness")
///   D      dispersion ("inharmonicity")
///   alpha  aspect ratio of the membrane, in (0, 1]
struct ShapeVector {
  double omega = 2.0 * std::numbers::pi * 100.0;
  double tau = 0.5;
  double p = 0.01;
  double D = 0.01;
  double alpha = 0.8;

  double beta() const { return alpha + 1.0 / alpha; }
  double omega_hz() const { return omega / (2.0 * std::numbers::pi); }

  std::array<double, 5> as_array() const { return {omega, tau, p, D, alpha}; }
  static ShapeVector from_array(const std::array<double, 5>& a) {
    return {a[0], a[1], a[2], a[3], a[4]};
  }

  static ShapeVector from_hz(double omega_hz, double tau, double p, double D, double alpha) {
    return {2.0 * std::numbers::pi * omega_hz, tau, p, D, alpha};
  }

  bool operator==(const ShapeVector&) const = default;
};

inline constexpr std::array<const char*, 5> kShapeFieldNames = {"omega", "tau", "p", "D", "alpha"};

/// Throws Errc::invalid_argument naming the first offending field.
inline void validate(const ShapeVector& theta) {
  auto check = [](bool ok, const char* field, const char* what) {
    if (!ok) throw Error(Errc::invalid_argument, std::string(field) + " " + what, field);
  };
  check(std::isfinite(theta.omega) && theta.omega > 0, "omega", "must be finite and > 0");
  check(std::isfinite(theta.tau) && theta.tau > 0, "tau", "must be finite and > 0");
  check(std::isfinite(theta.p) && theta.p >= 0, "p", "must be finite and >= 0");
  check(std::isfinite(theta.D) && theta.D >= 0, "D", "must be finite and >= 0");
  check(std::isfinite(theta.alpha) && theta.alpha > 0 && theta.alpha <= 1, "alpha",
        "must lie in (0, 1]");
}

/// Coefficients of the damped stiff-membrane equation.
struct PhysicalParams {
  double S = 0.0;   // stiffness
  double c = 0.0;   // wave speed
  double d1 = 0.0;  // first-order damping
  double d3 = 0.0;  // third-order damping
  double alpha = 1.0;
};

/// Maps physical coefficients onto the perceptual shape vector.
///
/// The mapping is the one that makes the (1,1) mode poles of the membrane
/// equation coincide with sigma = 1/tau and omega, and reproduces every other
/// pole through modal_grid() with the normalized mode constant
/// gamma_hat = gamma / gamma_11, gamma_11 = beta / alpha. With G = beta/alpha:
///
///   omega^2 = G^2 (S^4 - d3^2/4) + G (c^2 + d1 d3 / 2) - d1^2 / 4
///   tau     = 2 / (d1 - G d3)
///   p       = G d3 / (G d3 - d1)
///   D       = G sqrt(S^4 - d3^2/4) / omega
inline ShapeVector shape_from_physical(const PhysicalParams& params) {
  const auto& [S, c, d1, d3, alpha] = params;
  require(std::isfinite(S) && std::isfinite(c) && std::isfinite(d1) && std::isfinite(d3) &&
              std::isfinite(alpha),
          Errc::invalid_argument, "physical parameters must be finite");
  require(alpha > 0 && alpha <= 1, Errc::invalid_argument, "alpha must lie in (0, 1]", "alpha");

  const double beta = alpha + 1.0 / alpha;
  const double G = beta / alpha;
  const double S4 = S * S * S * S;

  const double decay = d1 - G * d3;
  require(decay > 0, Errc::unstable_damping,
          "d1 - (beta/alpha) d3 must be > 0 for a finite positive decay time", "d1");

  const double disp_sq = S4 - 0.25 * d3 * d3;
  require(disp_sq >= 0, Errc::negative_dispersion, "S^4 - d3^2/4 must be >= 0", "S");

  const double omega_sq = G * G * disp_sq + G * (c * c + 0.5 * d1 * d3) - 0.25 * d1 * d1;
  require(omega_sq > 0, Errc::negative_fundamental,
          "the fundamental's squared carrier frequency is not positive", "c");

  ShapeVector theta;
  theta.omega = std::sqrt(omega_sq);
  theta.tau = 2.0 / decay;
  theta.p = G * d3 / (G * d3 - d1);
  theta.D = G * std::sqrt(disp_sq) / theta.omega;
  theta.alpha = alpha;
  validate(theta);
  return theta;
}

}  // namespace hearshape
