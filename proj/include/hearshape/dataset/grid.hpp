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

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hearshape/core/error.hpp"
#include "hearshape/core/random.hpp"
#include "hearshape/synth/shape.hpp"

namespace hearshape::dataset {

enum class Scale { linear, log };

struct Axis {
  double min = 0.0;
  double max = 1.0;
  int count = 6;
  Scale scale = Scale::linear;

  double value(int i) const {
    const double t = count > 1 ? double(i) / double(count - 1) : 0.0;
    if (scale == Scale::log) return std::exp(std::log(min) + t * (std::log(max) - std::log(min)));
    return min + t * (max - min);
  }
  double to_unit(double v) const {
    if (scale == Scale::log) return (std::log(v) - std::log(min)) / (std::log(max) - std::log(min));
    return (v - min) / (max - min);
  }
  double from_unit(double u) const {
    if (scale == Scale::log) return std::exp(std::log(min) + u * (std::log(max) - std::log(min)));
    return min + u * (max - min);
  }
};

/// Axes are in user units: (omega in Hz, tau in s, p, D, alpha).
struct GridSpec {
  std::array<Axis, 5> axes = {Axis{40.0, 500.0, 6, Scale::linear}, Axis{0.1, 1.0, 6, Scale::linear},
                              Axis{1e-4, 1e-1, 6, Scale::log}, Axis{1e-4, 1e-1, 6, Scale::log},
                              Axis{0.5, 1.0, 6, Scale::linear}};
  double sample_rate = 22050.0;
  std::size_t n_samples = std::size_t(1) << 15;
  int M = 10;
  std::uint64_t seed = 0;

  std::size_t total() const {
    std::size_t t = 1;
    for (const auto& a : axes) t *= std::size_t(a.count);
    return t;
  }
  void set_points_per_dim(int count) {
    for (auto& a : axes) a.count = count;
  }
};

inline constexpr std::array<const char*, 5> kAxisNames = {"omega_hz", "tau", "p", "D", "alpha"};

/// Fraction of the non-validation entries' share of the full grid that goes
/// to training: 82221 of 100000 on the 10-per-dimension grid.
inline constexpr double kTrainFraction = 0.82221;
/// Validation keeps indices whose relative position lies in this window.
inline constexpr double kCenterLo = 0.2;
inline constexpr double kCenterHi = 0.8;

inline void validate(const GridSpec& spec) {
  for (std::size_t d = 0; d < 5; ++d) {
    const auto& a = spec.axes[d];
    const std::string f = kAxisNames[d];
    require(a.count >= 2, Errc::invalid_argument, "count must be >= 2", f);
    require(std::isfinite(a.min) && std::isfinite(a.max) && a.min < a.max, Errc::invalid_argument,
            "min must be < max", f);
    require(a.scale == Scale::linear || a.min > 0, Errc::invalid_argument,
            "log axis needs a positive minimum", f);
  }
  require(spec.axes[2].scale == Scale::log && spec.axes[3].scale == Scale::log,
          Errc::invalid_argument, "p and D axes must be logarithmic", "scale");
  require(spec.axes[0].min > 0 && spec.axes[1].min > 0 && spec.axes[4].min > 0 && spec.axes[4].max <= 1,
          Errc::invalid_argument, "axis ranges must describe valid drums", "axes");
  require(spec.sample_rate > 0 && spec.n_samples >= 1 && spec.M >= 1, Errc::invalid_argument,
          "sample_rate, n_samples and M must be positive");
}

enum class Split { train, val, test };

inline std::string to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "?";
}

inline Split split_from_string(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "val" || s == "validation") return Split::val;
  if (s == "test") return Split::test;
  throw Error(Errc::invalid_argument, "unknown split '" + s + "'", "split");
}

struct Entry {
  std::size_t id = 0;
  std::array<int, 5> index{};
  ShapeVector theta;
  std::array<double, 5> unit{};
  Split split = Split::train;
  bool valid = true;
  std::string waveform_path;
  std::string feature_path;
};

struct Manifest {
  GridSpec grid;
  std::vector<Entry> entries;
  std::size_t count(Split s) const {
    std::size_t n = 0;
    for (const auto& e : entries) n += e.split == s;
    return n;
  }
  std::size_t invalid() const {
    std::size_t n = 0;
    for (const auto& e : entries) n += !e.valid;
    return n;
  }
};

inline ShapeVector theta_at(const GridSpec& spec, const std::array<int, 5>& idx) {
  std::array<double, 5> v;
  for (std::size_t d = 0; d < 5; ++d) v[d] = spec.axes[d].value(idx[d]);
  return ShapeVector::from_hz(v[0], v[1], v[2], v[3], v[4]);
}

/// Min-max normalization per axis, log axes in log space.
inline std::array<double, 5> normalize_theta(const ShapeVector& theta, const GridSpec& spec) {
  const std::array<double, 5> raw = {theta.omega_hz(), theta.tau, theta.p, theta.D, theta.alpha};
  std::array<double, 5> u;
  for (std::size_t d = 0; d < 5; ++d) {
    const auto& a = spec.axes[d];
    const double tol = 1e-12 * std::max(std::abs(a.min), std::abs(a.max));
    require(raw[d] >= a.min - tol && raw[d] <= a.max + tol && std::isfinite(raw[d]), Errc::out_of_range,
            "value outside the grid range", kAxisNames[d]);
    u[d] = a.to_unit(raw[d]);
  }
  return u;
}

inline ShapeVector denormalize_theta(const std::array<double, 5>& u, const GridSpec& spec) {
  std::array<double, 5> v;
  for (std::size_t d = 0; d < 5; ++d) {
    require(u[d] >= -1e-12 && u[d] <= 1 + 1e-12, Errc::out_of_range,
            "normalized value outside [0, 1]", kAxisNames[d]);
    v[d] = spec.axes[d].from_unit(u[d]);
  }
  return ShapeVector::from_hz(v[0], v[1], v[2], v[3], v[4]);
}

/// Like denormalize_theta, but clamps to the unit cube first. Used for
/// network predictions, which may leave it.
inline ShapeVector denormalize_clamped(std::array<double, 5> u, const GridSpec& spec) {
  for (auto& v : u) v = std::clamp(v, 0.0, 1.0);
  return denormalize_theta(u, spec);
}

inline bool in_center(int i, int count) {
  const double t = double(i) / double(count - 1);
  return t >= kCenterLo - 1e-9 && t <= kCenterHi + 1e-9;
}

/// Enumerates the grid row-major over (omega, tau, p, D, alpha). Entries in
/// the center box of every axis form the validation set; the rest are
/// shuffled with `seed` and the first round(0.82221 * total) become training
/// entries, the remainder test entries.
inline Manifest generate_grid(const GridSpec& spec) {
  validate(spec);
  for (std::size_t d = 0; d < 5; ++d) {
    bool any = false;
    for (int i = 0; i < spec.axes[d].count; ++i) any |= in_center(i, spec.axes[d].count);
    require(any, Errc::empty_validation, "the center window of this axis holds no grid point",
            kAxisNames[d]);
  }
  Manifest m;
  m.grid = spec;
  const std::size_t total = spec.total();
  m.entries.resize(total);
  std::vector<std::size_t> outside;
  for (std::size_t id = 0; id < total; ++id) {
    Entry& e = m.entries[id];
    e.id = id;
    std::size_t r = id;
    for (int d = 4; d >= 0; --d) {
      e.index[d] = int(r % std::size_t(spec.axes[d].count));
      r /= std::size_t(spec.axes[d].count);
    }
    e.theta = theta_at(spec, e.index);
    for (std::size_t d = 0; d < 5; ++d)
      e.unit[d] = double(e.index[d]) / double(spec.axes[d].count - 1);
    bool center = true;
    for (std::size_t d = 0; d < 5; ++d) center &= in_center(e.index[d], spec.axes[d].count);
    e.split = center ? Split::val : Split::test;
    if (!center) outside.push_back(id);
  }
  Rng rng(spec.seed);
  shuffle(outside, rng);
  const std::size_t n_train =
      std::min(outside.size(), std::size_t(std::llround(kTrainFraction * double(total))));
  for (std::size_t i = 0; i < n_train; ++i) m.entries[outside[i]].split = Split::train;
  return m;
}

// ---- JSON --------------------------------------------------------------

inline nlohmann::json to_json(const GridSpec& g) {
  nlohmann::json axes = nlohmann::json::object();
  for (std::size_t d = 0; d < 5; ++d) {
    const auto& a = g.axes[d];
    axes[kAxisNames[d]] = {{"min", a.min}, {"max", a.max}, {"count", a.count},
                           {"scale", a.scale == Scale::log ? "log" : "linear"}};
  }
  return {{"axes", axes}, {"sample_rate", g.sample_rate}, {"n_samples", g.n_samples},
          {"M", g.M},     {"seed", g.seed}};
}

inline GridSpec grid_from_json(const nlohmann::json& j) {
  GridSpec g;
  for (std::size_t d = 0; d < 5; ++d) {
    const auto& a = j.at("axes").at(kAxisNames[d]);
    g.axes[d].min = a.at("min").get<double>();
    g.axes[d].max = a.at("max").get<double>();
    g.axes[d].count = a.at("count").get<int>();
    const std::string s = a.at("scale").get<std::string>();
    require(s == "log" || s == "linear", Errc::invalid_argument, "scale must be linear or log",
            kAxisNames[d]);
    g.axes[d].scale = s == "log" ? Scale::log : Scale::linear;
  }
  g.sample_rate = j.at("sample_rate").get<double>();
  g.n_samples = j.at("n_samples").get<std::size_t>();
  g.M = j.at("M").get<int>();
  g.seed = j.at("seed").get<std::uint64_t>();
  return g;
}

inline nlohmann::json to_json(const Manifest& m) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : m.entries) {
    nlohmann::json j = {{"id", e.id},
                        {"index", e.index},
                        {"theta", {e.theta.omega_hz(), e.theta.tau, e.theta.p, e.theta.D, e.theta.alpha}},
                        {"unit", e.unit},
                        {"split", to_string(e.split)},
                        {"valid", e.valid}};
    if (!e.waveform_path.empty()) j["waveform"] = e.waveform_path;
    if (!e.feature_path.empty()) j["features"] = e.feature_path;
    entries.push_back(std::move(j));
  }
  return {{"grid", to_json(m.grid)},
          {"theta_units", {"omega_hz", "tau_s", "p", "D", "alpha"}},
          {"counts",
           {{"total", m.entries.size()},
            {"train", m.count(Split::train)},
            {"val", m.count(Split::val)},
            {"test", m.count(Split::test)},
            {"invalid", m.invalid()}}},
          {"entries", entries}};
}

inline Manifest manifest_from_json(const nlohmann::json& j) {
  Manifest m;
  m.grid = grid_from_json(j.at("grid"));
  for (const auto& je : j.at("entries")) {
    Entry e;
    e.id = je.at("id").get<std::size_t>();
    e.index = je.at("index").get<std::array<int, 5>>();
    const auto t = je.at("theta").get<std::array<double, 5>>();
    e.theta = ShapeVector::from_hz(t[0], t[1], t[2], t[3], t[4]);
    e.unit = je.at("unit").get<std::array<double, 5>>();
    e.split = split_from_string(je.at("split").get<std::string>());
    e.valid = je.at("valid").get<bool>();
    e.waveform_path = je.value("waveform", "");
    e.feature_path = je.value("features", "");
    m.entries.push_back(std::move(e));
  }
  return m;
}

inline void save_manifest(const std::filesystem::path& path, const Manifest& m) {
  std::ofstream out(path);
  require(static_cast<bool>(out), Errc::io_error, "cannot open for writing", path.string());
  out << to_json(m).dump(1) << '\n';
  require(static_cast<bool>(out), Errc::io_error, "write failed", path.string());
}

inline Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), Errc::io_error, "cannot open for reading", path.string());
  return manifest_from_json(nlohmann::json::parse(in));
}

}  // namespace hearshape::dataset
