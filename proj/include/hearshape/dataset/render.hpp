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

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <mutex>
#include <string>
#include <vector>

#include "hearshape/core/error.hpp"
#include "hearshape/core/parallel.hpp"
#include "hearshape/dataset/grid.hpp"
#include "hearshape/dsp/wav.hpp"
#include "hearshape/scattering/feature_io.hpp"
#include "hearshape/scattering/transform.hpp"
#include "hearshape/synth/synthesize.hpp"

namespace hearshape::dataset {

struct FeatureSettings {
  int J = 8;
  int N = 2;
  double eps = 1e-3;
};

/// Log-scattering features of one waveform, as stored on disk and fed to the
/// network.
inline scattering::FeatureMatrix log_features(const std::vector<float>& wave,
                                              const scattering::Filterbank& fb, int N, double eps) {
  return scattering::to_float(scattering::log_compress(scattering::scattering_forward(wave, fb, N), eps));
}

struct RenderOptions {
  FeatureSettings features;
  StrikeConfig strike;
  bool write_waveforms = true;
  unsigned threads = 0;
  bool verbose = false;
};

struct RenderReport {
  std::size_t rendered = 0;
  std::size_t invalid = 0;
  std::vector<std::string> errors;
};

/// Synthesizes every entry and writes audio/<id>.wav and
/// features/<id>.{f32,json} under `root`. Paths stored in the manifest are
/// relative to `root`. Entries whose shape cannot be rendered (a negative
/// squared carrier, or every mode above Nyquist) are marked invalid and
/// skipped; I/O failures are collected and reported together.
inline RenderReport render(Manifest& manifest, const std::filesystem::path& root,
                           const RenderOptions& opt = {}) {
  const GridSpec& g = manifest.grid;
  const auto fb = scattering::build_filterbank(g.n_samples, opt.features.J);
  std::filesystem::create_directories(root / "features");
  if (opt.write_waveforms) std::filesystem::create_directories(root / "audio");
  SynthConfig cfg;
  cfg.n_samples = g.n_samples;
  cfg.sample_rate = g.sample_rate;
  cfg.M = g.M;

  scattering::FeatureMeta meta;
  meta.n_samples = g.n_samples;
  meta.sample_rate = g.sample_rate;
  meta.J = opt.features.J;
  meta.N = opt.features.N;
  meta.eps = opt.features.eps;
  meta.frames = fb.frames();
  meta.paths = scattering::path_table(opt.features.J, opt.features.N);

  std::mutex mu;
  RenderReport report;
  std::atomic<std::size_t> done{0};
  const std::size_t total = manifest.entries.size();
  parallel_for(
      total,
      [&](std::size_t i) {
        Entry& e = manifest.entries[i];
        char name[32];
        std::snprintf(name, sizeof name, "%06zu", e.id);
        try {
          const auto wave = synthesize(e.theta, opt.strike, cfg);
          if (opt.write_waveforms) {
            e.waveform_path = std::string("audio/") + name + ".wav";
            wav::write(root / e.waveform_path, wave, static_cast<std::uint32_t>(g.sample_rate));
          }
          e.feature_path = std::string("features/") + name;
          scattering::write_features(root / e.feature_path,
                                     log_features(wave, fb, opt.features.N, opt.features.eps), meta);
          e.valid = true;
        } catch (const Error& err) {
          std::lock_guard lock(mu);
          if (err.code() == Errc::negative_carrier || err.code() == Errc::all_modes_aliased) {
            e.valid = false;
            e.waveform_path.clear();
            e.feature_path.clear();
            ++report.invalid;
          } else {
            report.errors.push_back(std::string(name) + ": " + err.what());
          }
        }
        const std::size_t k = ++done;
        if (opt.verbose && (k % 500 == 0 || k == total))
          std::fprintf(stderr, "rendered %zu / %zu\n", k, total);
      },
      opt.threads);
  report.rendered = total - report.invalid - report.errors.size();
  if (report.invalid > 0)
    std::fprintf(stderr, "excluded %zu entries whose shape cannot be rendered\n", report.invalid);
  if (!report.errors.empty())
    throw Error(Errc::io_error, std::to_string(report.errors.size()) +
                                    " entries failed to render; first: " + report.errors.front());
  return report;
}

/// Features and normalized targets of one split, in manifest order.
struct Samples {
  std::size_t frames = 0;
  std::size_t paths = 0;
  std::vector<float> features;              // [sample][frame][path]
  std::vector<std::array<double, 5>> targets;
  std::vector<std::size_t> ids;

  std::size_t size() const { return targets.size(); }
  const float* sample(std::size_t i) const { return features.data() + i * frames * paths; }
};

inline Samples load_split(const Manifest& manifest, const std::filesystem::path& root, Split split) {
  Samples s;
  for (const auto& e : manifest.entries) {
    if (e.split != split || !e.valid) continue;
    require(!e.feature_path.empty(), Errc::io_error, "entry has not been rendered",
            std::to_string(e.id));
    scattering::FeatureMeta meta;
    const auto m = scattering::read_features(root / e.feature_path, &meta);
    if (s.targets.empty()) {
      s.frames = m.frames;
      s.paths = m.paths;
    }
    require(m.frames == s.frames && m.paths == s.paths, Errc::shape_mismatch,
            "feature files disagree in shape", e.feature_path);
    s.features.insert(s.features.end(), m.values.begin(), m.values.end());
    s.targets.push_back(e.unit);
    s.ids.push_back(e.id);
  }
  return s;
}

}  // namespace hearshape::dataset
