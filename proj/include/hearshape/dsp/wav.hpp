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

// RIFF/WAVE mono I/O. Writing always produces IEEE float32; reading accepts
// float32 and 16-bit PCM, mixing multichannel input down to mono.

#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "hearshape/core/error.hpp"

namespace hearshape::wav {

struct Audio {
  std::vector<float> samples;
  std::uint32_t sample_rate = 22050;
};

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}
inline std::uint32_t get_u32(const unsigned char* p) {
  return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) |
         (std::uint32_t(p[3]) << 24);
}
inline std::uint16_t get_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

}  // namespace detail

/// Serializes mono float32 samples into a complete WAV byte string.
inline std::string encode(std::span<const float> samples, std::uint32_t sample_rate) {
  const auto data_bytes = static_cast<std::uint32_t>(samples.size() * 4);
  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  detail::put_u32(out, 36 + data_bytes);
  out += "WAVE";
  out += "fmt ";
  detail::put_u32(out, 16);
  detail::put_u16(out, 3);  // WAVE_FORMAT_IEEE_FLOAT
  detail::put_u16(out, 1);
  detail::put_u32(out, sample_rate);
  detail::put_u32(out, sample_rate * 4);
  detail::put_u16(out, 4);
  detail::put_u16(out, 32);
  out += "data";
  detail::put_u32(out, data_bytes);
  for (float s : samples) {
    std::uint32_t bits;
    std::memcpy(&bits, &s, 4);
    detail::put_u32(out, bits);
  }
  return out;
}

inline Audio decode(std::string_view bytes) {
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::size_t size = bytes.size();
  require(size >= 12 && std::memcmp(p, "RIFF", 4) == 0 && std::memcmp(p + 8, "WAVE", 4) == 0,
          Errc::io_error, "not a RIFF/WAVE stream");
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= size) {
    const std::uint32_t chunk = detail::get_u32(p + pos + 4);
    const unsigned char* body = p + pos + 8;
    const std::size_t avail = size - pos - 8;
    if (std::memcmp(p + pos, "fmt ", 4) == 0) {
      require(chunk >= 16 && avail >= 16, Errc::io_error, "truncated fmt chunk");
      format = detail::get_u16(body);
      channels = detail::get_u16(body + 2);
      rate = detail::get_u32(body + 4);
      bits = detail::get_u16(body + 14);
      if (format == 0xFFFE && chunk >= 26) format = detail::get_u16(body + 24);  // extensible
      have_fmt = true;
    } else if (std::memcmp(p + pos, "data", 4) == 0) {
      require(have_fmt, Errc::io_error, "data chunk before fmt chunk");
      require(channels >= 1, Errc::io_error, "zero channels");
      const std::size_t bytes_avail = std::min<std::size_t>(chunk, avail);
      Audio audio;
      audio.sample_rate = rate;
      if (format == 3 && bits == 32) {
        const std::size_t frames = bytes_avail / (4u * channels);
        audio.samples.resize(frames);
        for (std::size_t i = 0; i < frames; ++i) {
          double acc = 0;
          for (std::size_t c = 0; c < channels; ++c) {
            float v;
            std::uint32_t raw = detail::get_u32(body + 4 * (i * channels + c));
            std::memcpy(&v, &raw, 4);
            acc += v;
          }
          audio.samples[i] = static_cast<float>(acc / channels);
        }
      } else if (format == 1 && bits == 16) {
        const std::size_t frames = bytes_avail / (2u * channels);
        audio.samples.resize(frames);
        for (std::size_t i = 0; i < frames; ++i) {
          double acc = 0;
          for (std::size_t c = 0; c < channels; ++c)
            acc += static_cast<std::int16_t>(detail::get_u16(body + 2 * (i * channels + c))) /
                   32768.0;
          audio.samples[i] = static_cast<float>(acc / channels);
        }
      } else {
        throw Error(Errc::io_error, "unsupported WAV encoding (format " + std::to_string(format) +
                                        ", " + std::to_string(bits) + " bits)");
      }
      return audio;
    }
    pos += 8 + chunk + (chunk & 1);
  }
  throw Error(Errc::io_error, "no data chunk");
}

inline void write(const std::filesystem::path& path, std::span<const float> samples,
                  std::uint32_t sample_rate) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), Errc::io_error, "cannot open for writing", path.string());
  const std::string bytes = encode(samples, sample_rate);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  require(static_cast<bool>(out), Errc::io_error, "write failed", path.string());
}

inline Audio read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), Errc::io_error, "cannot open for reading", path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode(bytes);
}

}  // namespace hearshape::wav
