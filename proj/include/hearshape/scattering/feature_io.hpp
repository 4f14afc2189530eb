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

// Feature files: <stem>.f32 holds little-endian float32 [frames x paths],
// row-major; <stem>.json describes it.

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hearshape/core/error.hpp"
#include "hearshape/scattering/transform.hpp"

namespace hearshape::scattering {

static_assert(std::endian::native == std::endian::little, "feature files assume a little-endian host");

struct FeatureMeta {
  std::size_t n_samples = 0;
  double sample_rate = 22050.0;
  int J = 8;
  int Q = 1;
  int N = 2;
  double eps = 1e-3;  // 0 for raw (uncompressed) coefficients
  std::size_t frames = 0;
  std::vector<Path> paths;
};

struct FeatureMatrix {
  std::size_t frames = 0;
  std::size_t paths = 0;
  std::vector<float> values;  // [frame][path]
};

inline FeatureMatrix to_float(const ScatteringCoeffs& s) {
  FeatureMatrix m;
  m.frames = s.frames;
  m.paths = s.paths.size();
  m.values.assign(s.values.begin(), s.values.end());
  return m;
}

inline nlohmann::json to_json(const FeatureMeta& meta) {
  nlohmann::json paths = nlohmann::json::array();
  for (const auto& p : meta.paths) {
    nlohmann::json e = {{"order", p.order}};
    if (p.order >= 1) e["j1"] = p.j1;
    if (p.order >= 2) e["j2"] = p.j2;
    paths.push_back(e);
  }
  return {{"n_samples", meta.n_samples}, {"sample_rate", meta.sample_rate},
          {"J", meta.J},                 {"Q", meta.Q},
          {"N", meta.N},                 {"eps", meta.eps},
          {"frames", meta.frames},       {"dtype", "float32-le"},
          {"layout", "row-major [frames x paths]"},
          {"path_table", paths}};
}

inline FeatureMeta meta_from_json(const nlohmann::json& j) {
  FeatureMeta meta;
  meta.n_samples = j.at("n_samples").get<std::size_t>();
  meta.sample_rate = j.at("sample_rate").get<double>();
  meta.J = j.at("J").get<int>();
  meta.Q = j.at("Q").get<int>();
  meta.N = j.at("N").get<int>();
  meta.eps = j.at("eps").get<double>();
  meta.frames = j.at("frames").get<std::size_t>();
  for (const auto& e : j.at("path_table")) {
    Path p;
    p.order = e.at("order").get<int>();
    p.j1 = e.value("j1", -1);
    p.j2 = e.value("j2", -1);
    meta.paths.push_back(p);
  }
  return meta;
}

inline void write_features(const std::filesystem::path& stem, const FeatureMatrix& m,
                           const FeatureMeta& meta) {
  require(m.values.size() == m.frames * m.paths && meta.paths.size() == m.paths &&
              meta.frames == m.frames,
          Errc::shape_mismatch, "feature matrix does not match its metadata");
  auto bin = stem;
  bin += ".f32";
  auto hdr = stem;
  hdr += ".json";
  {
    std::ofstream out(bin, std::ios::binary);
    require(static_cast<bool>(out), Errc::io_error, "cannot open for writing", bin.string());
    out.write(reinterpret_cast<const char*>(m.values.data()),
              static_cast<std::streamsize>(m.values.size() * sizeof(float)));
    require(static_cast<bool>(out), Errc::io_error, "write failed", bin.string());
  }
  std::ofstream out(hdr);
  require(static_cast<bool>(out), Errc::io_error, "cannot open for writing", hdr.string());
  out << to_json(meta).dump(2) << '\n';
}

/// Reads only the binary part; the caller supplies the expected shape.
inline FeatureMatrix read_feature_values(const std::filesystem::path& bin, std::size_t frames,
                                         std::size_t paths) {
  std::ifstream in(bin, std::ios::binary);
  require(static_cast<bool>(in), Errc::io_error, "cannot open for reading", bin.string());
  FeatureMatrix m;
  m.frames = frames;
  m.paths = paths;
  m.values.resize(frames * paths);
  in.read(reinterpret_cast<char*>(m.values.data()),
          static_cast<std::streamsize>(m.values.size() * sizeof(float)));
  require(in.gcount() == static_cast<std::streamsize>(m.values.size() * sizeof(float)),
          Errc::io_error, "feature file is truncated", bin.string());
  return m;
}

inline FeatureMatrix read_features(const std::filesystem::path& stem, FeatureMeta* meta_out = nullptr) {
  auto hdr = stem;
  hdr += ".json";
  std::ifstream in(hdr);
  require(static_cast<bool>(in), Errc::io_error, "cannot open for reading", hdr.string());
  const FeatureMeta meta = meta_from_json(nlohmann::json::parse(in));
  auto bin = stem;
  bin += ".f32";
  FeatureMatrix m = read_feature_values(bin, meta.frames, meta.paths.size());
  if (meta_out) *meta_out = meta;
  return m;
}

}  // namespace hearshape::scattering
