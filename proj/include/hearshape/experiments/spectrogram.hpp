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
#include <numbers>
#include <span>
#include <vector>

#include "hearshape/core/error.hpp"
#include "hearshape/dsp/fft.hpp"
#include "hearshape/dsp/image.hpp"

namespace hearshape::experiments {

/// STFT magnitude with a periodic Hann window, no padding: rows are the
/// window/2 + 1 frequency bins, columns are frames t * hop.
inline image::Matrix spectrogram(std::span<const double> x, std::size_t window, std::size_t hop) {
  require(fft::is_power_of_two(window), Errc::invalid_argument, "window must be a power of two", "window");
  require(hop >= 1, Errc::invalid_argument, "hop must be >= 1", "hop");
  require(x.size() >= window, Errc::length_mismatch, "signal is shorter than the window");
  const std::size_t frames = (x.size() - window) / hop + 1;
  const std::size_t bins = window / 2 + 1;
  std::vector<double> hann(window);
  for (std::size_t i = 0; i < window; ++i)
    hann[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * double(i) / double(window));
  image::Matrix S(bins, frames);
  fft::RealBuffer frame(window);
  fft::ComplexBuffer spec;
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t i = 0; i < window; ++i) frame[i] = x[t * hop + i] * hann[i];
    fft::forward_real(frame, spec);
    for (std::size_t k = 0; k < bins; ++k) S(k, t) = std::abs(spec[k]);
  }
  return S;
}

/// Writes <stem>.csv and <stem>.png (log magnitude, low frequencies at the
/// bottom).
inline void write_spectrogram(const std::filesystem::path& stem, const image::Matrix& S) {
  auto csv = stem;
  csv += ".csv";
  auto png = stem;
  png += ".png";
  image::write_csv(csv, S);
  image::write_png(png, S, true, true);
}

}  // namespace hearshape::experiments
