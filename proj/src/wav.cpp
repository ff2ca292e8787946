// Copyright 2026 The Protosound Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "protosound/wav.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace protosound {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  out.push_back(v & 0xFF);
  out.push_back((v >> 8) & 0xFF);
  out.push_back((v >> 16) & 0xFF);
  out.push_back((v >> 24) & 0xFF);
}

void put_u16(std::vector<unsigned char>& out, std::uint16_t v) {
  out.push_back(v & 0xFF);
  out.push_back((v >> 8) & 0xFF);
}

}  // namespace

Waveform read_wav(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open WAV file: " + path);
  std::vector<unsigned char> data((std::istreambuf_iterator<char>(f)),
                                  std::istreambuf_iterator<char>());
  if (data.size() < 44 || std::memcmp(data.data(), "RIFF", 4) != 0 ||
      std::memcmp(data.data() + 8, "WAVE", 4) != 0) {
    throw std::runtime_error("not a RIFF/WAVE file: " + path);
  }

  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t bits = 0;
  const unsigned char* samples = nullptr;
  std::size_t samples_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= data.size()) {
    const char* chunk_id = reinterpret_cast<const char*>(data.data() + pos);
    const std::uint32_t chunk_size = read_u32(data.data() + pos + 4);
    const std::size_t body = pos + 8;
    if (body + chunk_size > data.size()) {
      throw std::runtime_error("truncated WAV chunk: " + path);
    }
    if (std::memcmp(chunk_id, "fmt ", 4) == 0) {
      if (chunk_size < 16) throw std::runtime_error("malformed fmt chunk: " + path);
      format = read_u16(data.data() + body);
      channels = read_u16(data.data() + body + 2);
      sample_rate = read_u32(data.data() + body + 4);
      bits = read_u16(data.data() + body + 14);
      if (format == kFormatExtensible && chunk_size >= 40) {
        format = read_u16(data.data() + body + 24);  // first two bytes of the sub-format GUID
      }
    } else if (std::memcmp(chunk_id, "data", 4) == 0) {
      samples = data.data() + body;
      samples_size = chunk_size;
    }
    pos = body + chunk_size + (chunk_size & 1);
  }

  if (samples == nullptr || channels == 0 || sample_rate == 0) {
    throw std::runtime_error("missing fmt or data chunk: " + path);
  }
  const std::size_t bytes_per_sample = bits / 8;
  if (bytes_per_sample == 0) throw std::runtime_error("bad bit depth: " + path);
  const std::size_t frame_size = bytes_per_sample * channels;
  const std::size_t n_frames = samples_size / frame_size;

  Waveform w;
  w.sample_rate = static_cast<int>(sample_rate);
  w.samples.resize(n_frames);
  for (std::size_t i = 0; i < n_frames; ++i) {
    double acc = 0.0;
    for (std::uint16_t ch = 0; ch < channels; ++ch) {
      const unsigned char* p = samples + i * frame_size + ch * bytes_per_sample;
      double value = 0.0;
      if (format == kFormatFloat && bits == 32) {
        float fv;
        std::memcpy(&fv, p, 4);
        value = fv;
      } else if (format == kFormatFloat && bits == 64) {
        double dv;
        std::memcpy(&dv, p, 8);
        value = dv;
      } else if (format == kFormatPcm && bits == 16) {
        const std::int16_t s = static_cast<std::int16_t>(p[0] | (p[1] << 8));
        value = s / 32768.0;
      } else if (format == kFormatPcm && bits == 24) {
        std::int32_t s = p[0] | (p[1] << 8) | (p[2] << 16);
        if (s & 0x800000) s |= ~0xFFFFFF;
        value = s / 8388608.0;
      } else if (format == kFormatPcm && bits == 32) {
        std::int32_t s;
        std::memcpy(&s, p, 4);
        value = s / 2147483648.0;
      } else {
        throw std::runtime_error("unsupported WAV encoding: " + path);
      }
      acc += value;
    }
    w.samples[i] = acc / channels;
  }
  return w;
}

void write_wav(const std::string& path, const Waveform& w) {
  if (w.sample_rate <= 0) throw std::invalid_argument("sample_rate must be positive");
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(w.samples.size() * 4);
  std::vector<unsigned char> out;
  out.reserve(58 + data_bytes);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put_u32(out, 4 + 24 + 8 + data_bytes);
  out.insert(out.end(), {'W', 'A', 'V', 'E'});
  out.insert(out.end(), {'f', 'm', 't', ' '});
  put_u32(out, 16);
  put_u16(out, kFormatFloat);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(w.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(w.sample_rate) * 4);
  put_u16(out, 4);
  put_u16(out, 32);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put_u32(out, data_bytes);
  for (double v : w.samples) {
    const float fv = static_cast<float>(v);
    unsigned char b[4];
    std::memcpy(b, &fv, 4);
    out.insert(out.end(), b, b + 4);
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write WAV file: " + path);
  f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!f) throw std::runtime_error("short write: " + path);
}

}  // namespace protosound
