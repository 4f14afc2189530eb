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

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

#include "hearshape/core/error.hpp"
#include "hearshape/synth/shape.hpp"

namespace hearshape {

/// Poles of one mode: h(t) = exp(-sigma t) sin(omega t).
struct ModalPole {
  double sigma = 0.0;     // modulation frequency, 1/s
  double omega_sq = 0.0;  // squared carrier frequency, (rad/s)^2
};

/// Mode constant of multiindex (m1, m2) normalized so that (1,1) maps to 1.
inline double normalized_mode_constant(int m1, int m2, double alpha) {
  const double a2 = alpha * alpha;
  return (double(m1) * m1 + double(m2) * m2 / a2) / (1.0 + 1.0 / a2);
}

/// Pole pair for a mode with normalized constant gamma_hat. The carrier is
/// evaluated as omega^2 + (gamma_hat - 1) * (...), algebraically identical
/// to the quadratic form in gamma_hat but exact for the fundamental.
inline ModalPole modal_pole(const ShapeVector& theta, double gamma_hat) {
  const double w2 = theta.omega * theta.omega;
  const double d2 = theta.D * theta.D;
  const double one_minus_p = 1.0 - theta.p;
  const double A = one_minus_p * one_minus_p / (theta.tau * theta.tau);
  const double g = gamma_hat - 1.0;
  ModalPole pole;
  pole.sigma = (1.0 + theta.p * g) / theta.tau;
  pole.omega_sq = w2 + g * (d2 * w2 * (1.0 + gamma_hat) + A + w2 * (1.0 - d2));
  return pole;
}

/// Decay rates and carrier frequencies of an M x M grid of modes, stored
/// row-major over (m1 - 1, m2 - 1).
struct ModalGrid {
  int M = 0;
  double alpha = 1.0;
  std::vector<double> sigma;
  std::vector<double> omega_m;
  std::vector<double> gamma_hat;

  std::size_t index(int m1, int m2) const { return std::size_t(m1 - 1) * M + std::size_t(m2 - 1); }
  std::size_t size() const { return sigma.size(); }
};

inline ModalGrid modal_grid(const ShapeVector& theta, int M) {
  validate(theta);
  require(M >= 1, Errc::invalid_argument, "M must be >= 1", "M");
  ModalGrid grid;
  grid.M = M;
  grid.alpha = theta.alpha;
  const std::size_t count = std::size_t(M) * M;
  grid.sigma.resize(count);
  grid.omega_m.resize(count);
  grid.gamma_hat.resize(count);
  for (int m1 = 1; m1 <= M; ++m1) {
    for (int m2 = 1; m2 <= M; ++m2) {
      const std::size_t i = grid.index(m1, m2);
      const double gamma_hat = normalized_mode_constant(m1, m2, theta.alpha);
      const ModalPole pole = modal_pole(theta, gamma_hat);
      if (!(pole.omega_sq >= 0)) {
        const std::string mode = "(" + std::to_string(m1) + "," + std::to_string(m2) + ")";
        throw Error(Errc::negative_carrier, "squared carrier frequency of mode " + mode +
                                                " is negative",
                    mode);
      }
      grid.gamma_hat[i] = gamma_hat;
      grid.sigma[i] = pole.sigma;
      grid.omega_m[i] = std::sqrt(pole.omega_sq);
    }
  }
  return grid;
}

inline nlohmann::json to_json(const ModalGrid& grid) {
  nlohmann::json j;
  j["M"] = grid.M;
  j["alpha"] = grid.alpha;
  j["layout"] = "row-major over (m1-1, m2-1)";
  j["sigma"] = grid.sigma;
  j["omega_m"] = grid.omega_m;
  j["gamma_hat"] = grid.gamma_hat;
  return j;
}

}  // namespace hearshape
