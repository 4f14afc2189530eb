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

// Checkpoints: <stem>.json describes the network, how it was trained and
// where each tensor lives in <stem>.bin, a little-endian float32 blob.

#pragma once

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>

#include <json.hpp>

#include "hearshape/core/error.hpp"
#include "hearshape/nn/model.hpp"

namespace hearshape::nn {

static_assert(std::endian::native == std::endian::little, "checkpoints assume a little-endian host");

inline constexpr const char* kCheckpointFormat = "hearshape-checkpoint-1";

struct Checkpoint {
  nlohmann::json header;
  std::unique_ptr<Wav2Shape<float>> model;
};

/// `info` is merged into the header (training config, epoch, validation
/// loss, grid and feature settings).
inline void save_checkpoint(const std::filesystem::path& stem, Wav2Shape<float>& model,
                            const nlohmann::json& info) {
  nlohmann::json header = info;
  header["format"] = kCheckpointFormat;
  header["architecture"] = to_json(model.config());
  nlohmann::json table = nlohmann::json::array();
  std::size_t offset = 0;
  for (auto* t : model.state()) {
    table.push_back({{"name", t->name}, {"shape", t->shape}, {"offset", offset}, {"count", t->size()}});
    offset += t->size() * sizeof(float);
  }
  header["tensors"] = table;
  header["blob_bytes"] = offset;

  auto bin = stem;
  bin += ".bin";
  std::ofstream out(bin, std::ios::binary);
  require(static_cast<bool>(out), Errc::io_error, "cannot open for writing", bin.string());
  for (auto* t : model.state())
    out.write(reinterpret_cast<const char*>(t->data.data()), std::streamsize(t->size() * sizeof(float)));
  require(static_cast<bool>(out), Errc::io_error, "write failed", bin.string());

  auto js = stem;
  js += ".json";
  std::ofstream hout(js);
  require(static_cast<bool>(hout), Errc::io_error, "cannot open for writing", js.string());
  hout << header.dump(2) << '\n';
}

/// Accepts either the stem or the path of its .json / .bin file.
inline std::filesystem::path checkpoint_stem(std::filesystem::path p) {
  if (p.extension() == ".json" || p.extension() == ".bin") p.replace_extension();
  return p;
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const auto stem = checkpoint_stem(path);
  auto js = stem;
  js += ".json";
  std::ifstream hin(js);
  require(static_cast<bool>(hin), Errc::io_error, "cannot open checkpoint header", js.string());
  Checkpoint ck;
  ck.header = nlohmann::json::parse(hin);
  require(ck.header.value("format", "") == kCheckpointFormat, Errc::io_error,
          "unknown checkpoint format", js.string());
  ck.model = std::make_unique<Wav2Shape<float>>(model_config_from_json(ck.header.at("architecture")));

  auto bin = stem;
  bin += ".bin";
  std::ifstream in(bin, std::ios::binary);
  require(static_cast<bool>(in), Errc::io_error, "cannot open checkpoint blob", bin.string());
  std::string blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto& table = ck.header.at("tensors");
  auto state = ck.model->state();
  require(table.size() == state.size(), Errc::shape_mismatch, "checkpoint tensor count mismatch");
  for (std::size_t i = 0; i < state.size(); ++i) {
    const auto& e = table[i];
    require(e.at("name").get<std::string>() == state[i]->name &&
                e.at("shape").get<std::vector<std::size_t>>() == state[i]->shape,
            Errc::shape_mismatch, "checkpoint tensor does not match the architecture",
            e.at("name").get<std::string>());
    const std::size_t off = e.at("offset"), count = e.at("count");
    require(off + count * sizeof(float) <= blob.size(), Errc::io_error, "checkpoint blob is truncated");
    std::memcpy(state[i]->data.data(), blob.data() + off, count * sizeof(float));
  }
  return ck;
}

}  // namespace hearshape::nn
