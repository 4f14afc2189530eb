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

// Matrix dumps for the experiments: CSV and 8-bit grayscale PNG (libpng).

#pragma once

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "hearshape/core/error.hpp"

namespace hearshape::image {

/// Dense row-major matrix of doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), values(r * c, fill) {}
  double& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

inline void write_csv(const std::filesystem::path& path, const Matrix& m) {
  std::ofstream out(path);
  require(static_cast<bool>(out), Errc::io_error, "cannot open for writing", path.string());
  char buf[64];
  for (std::size_t r = 0; r < m.rows; ++r) {
    for (std::size_t c = 0; c < m.cols; ++c) {
      std::snprintf(buf, sizeof buf, "%.9g", m(r, c));
      if (c) out << ',';
      out << buf;
    }
    out << '\n';
  }
}

namespace detail {

inline void png_append(png_structp png, png_bytep data, png_size_t len) {
  static_cast<std::string*>(png_get_io_ptr(png))->append(reinterpret_cast<const char*>(data), len);
}

}  // namespace detail

/// Encodes an 8-bit grayscale image. `pixels` is row-major, width*height.
inline std::string encode_png(const std::vector<std::uint8_t>& pixels, std::uint32_t width,
                              std::uint32_t height) {
  require(pixels.size() == std::size_t(width) * height, Errc::length_mismatch,
          "pixel buffer size does not match image dimensions");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  require(png != nullptr, Errc::io_error, "libpng initialization failed");
  png_infop info = png_create_info_struct(png);
  std::string out;
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, info ? &info : nullptr);
    throw Error(Errc::io_error, "PNG encoding failed");
  }
  png_set_write_fn(png, &out, detail::png_append, nullptr);
  png_set_IHDR(png, info, width, height, 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(png, 9);
  std::vector<png_bytep> rows(height);
  for (std::uint32_t y = 0; y < height; ++y)
    rows[y] = const_cast<png_bytep>(pixels.data() + std::size_t(y) * width);
  png_set_rows(png, info, rows.data());
  png_write_png(png, info, PNG_TRANSFORM_IDENTITY, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

/// Renders a matrix as grayscale, row 0 at the bottom when `flip` is set
/// (the usual orientation for time-frequency plots). Values are mapped
/// linearly from [min, max] onto [0, 255]; pass `log_scale` for magnitudes.
inline void write_png(const std::filesystem::path& path, const Matrix& m, bool flip = false,
                      bool log_scale = false) {
  require(m.rows > 0 && m.cols > 0, Errc::invalid_argument, "empty matrix");
  std::vector<double> v = m.values;
  if (log_scale)
    for (auto& x : v) x = std::log10(std::max(x, 1e-12));
  const auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
  const double lo = *lo_it, hi = *hi_it;
  const double span = hi > lo ? hi - lo : 1.0;
  std::vector<std::uint8_t> pixels(v.size());
  for (std::size_t r = 0; r < m.rows; ++r) {
    const std::size_t dst = flip ? m.rows - 1 - r : r;
    for (std::size_t c = 0; c < m.cols; ++c) {
      const double t = (v[r * m.cols + c] - lo) / span;
      pixels[dst * m.cols + c] = static_cast<std::uint8_t>(std::lround(255.0 * t));
    }
  }
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), Errc::io_error, "cannot open for writing", path.string());
  const std::string bytes = encode_png(pixels, static_cast<std::uint32_t>(m.cols),
                                       static_cast<std::uint32_t>(m.rows));
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace hearshape::image
