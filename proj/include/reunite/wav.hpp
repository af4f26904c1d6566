// Copyright 2026 The reunite Authors
// SPDX-License-Identifier: Apache-2.0

// Minimal RIFF/WAVE codec for 16-bit PCM mono.

#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "reunite/error.hpp"
#include "reunite/types.hpp"

namespace reunite::wav {

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}
inline void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(char(v & 0xff));
  out.push_back(char((v >> 8) & 0xff));
}
inline std::uint32_t get_u32(const unsigned char* p) {
  return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 |
         std::uint32_t(p[3]) << 24;
}
inline std::uint16_t get_u16(const unsigned char* p) { return std::uint16_t(p[0] | p[1] << 8); }

}  // namespace detail

inline std::string encode(const AudioClip& clip) {
  using namespace detail;
  const auto data_bytes = std::uint32_t(clip.samples.size() * 2);
  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  put_u32(out, 36 + data_bytes);
  out += "WAVEfmt ";
  put_u32(out, 16);
  put_u16(out, 1);  // PCM
  put_u16(out, 1);  // mono
  put_u32(out, std::uint32_t(clip.sample_rate_hz));
  put_u32(out, std::uint32_t(clip.sample_rate_hz) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  out += "data";
  put_u32(out, data_bytes);
  for (auto s : clip.samples) put_u16(out, std::uint16_t(s));
  return out;
}

inline AudioClip decode(const std::string& bytes) {
  using namespace detail;
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::size_t n = bytes.size();
  if (n < 12 || std::memcmp(p, "RIFF", 4) != 0 || std::memcmp(p + 8, "WAVE", 4) != 0) {
    throw Error(ErrorCode::ParseError, "not a RIFF/WAVE file");
  }
  AudioClip clip;
  bool have_fmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= n) {
    const std::uint32_t size = get_u32(p + pos + 4);
    const std::size_t body = pos + 8;
    if (body + size > n) throw Error(ErrorCode::ParseError, "truncated WAV chunk");
    if (std::memcmp(p + pos, "fmt ", 4) == 0) {
      if (size < 16) throw Error(ErrorCode::ParseError, "short fmt chunk");
      const auto format = get_u16(p + body);
      const auto channels = get_u16(p + body + 2);
      const auto bits = get_u16(p + body + 14);
      if (format != 1 || channels != 1 || bits != 16) {
        throw Error(ErrorCode::ParseError, "only PCM16 mono WAV is supported");
      }
      clip.sample_rate_hz = int(get_u32(p + body + 4));
      have_fmt = true;
    } else if (std::memcmp(p + pos, "data", 4) == 0) {
      if (!have_fmt) throw Error(ErrorCode::ParseError, "data chunk before fmt chunk");
      clip.samples.resize(size / 2);
      for (std::size_t i = 0; i < clip.samples.size(); ++i) {
        clip.samples[i] = std::int16_t(get_u16(p + body + 2 * i));
      }
      return clip;
    }
    pos = body + size + (size & 1);
  }
  throw Error(ErrorCode::ParseError, "WAV file has no data chunk");
}

inline AudioClip read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return decode(ss.str());
}

inline void write_file(const std::string& path, const AudioClip& clip) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  const auto bytes = encode(clip);
  out.write(bytes.data(), std::streamsize(bytes.size()));
  if (!out) throw Error(ErrorCode::IoError, "short write to " + path);
}

}  // namespace reunite::wav
