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

#include "protosound/image.hpp"

#include <array>
#include <fstream>
#include <stdexcept>

namespace protosound {

namespace {

// 16 anchors of the standard viridis map, linearly interpolated.
constexpr std::array<Rgb, 16> kViridisAnchors = {{
    {68, 1, 84},    {72, 26, 108},  {71, 47, 125},  {65, 68, 135},
    {57, 86, 140},  {49, 104, 142}, {42, 120, 142}, {35, 136, 142},
    {31, 152, 139}, {34, 168, 132}, {53, 183, 121}, {84, 197, 104},
    {122, 209, 81}, {165, 219, 54}, {210, 226, 27}, {253, 231, 37},
}};

std::uint32_t crc32(const std::uint8_t* data, std::size_t len, std::uint32_t crc = 0xFFFFFFFFu) {
  static std::uint32_t table[256];
  static bool ready = false;
  if (!ready) {
    for (std::uint32_t i = 0; i < 256; ++i) {
      std::uint32_t c = i;
      for (int k = 0; k < 8; ++k) {
        c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      }
      table[i] = c;
    }
    ready = true;
  }
  for (std::size_t i = 0; i < len; ++i) {
    crc = table[(crc ^ data[i]) & 0xFF] ^ (crc >> 8);
  }
  return crc;
}

std::uint32_t adler32(const std::uint8_t* data, std::size_t len) {
  std::uint32_t a = 1, b = 0;
  for (std::size_t i = 0; i < len; ++i) {
    a = (a + data[i]) % 65521;
    b = (b + a) % 65521;
  }
  return (b << 16) | a;
}

void put_u32_be(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back((v >> 24) & 0xFF);
  out.push_back((v >> 16) & 0xFF);
  out.push_back((v >> 8) & 0xFF);
  out.push_back(v & 0xFF);
}

void put_chunk(std::vector<std::uint8_t>& out, const char type[4],
               const std::vector<std::uint8_t>& body) {
  put_u32_be(out, static_cast<std::uint32_t>(body.size()));
  std::vector<std::uint8_t> tagged;
  tagged.insert(tagged.end(), type, type + 4);
  tagged.insert(tagged.end(), body.begin(), body.end());
  out.insert(out.end(), tagged.begin(), tagged.end());
  put_u32_be(out, crc32(tagged.data(), tagged.size()) ^ 0xFFFFFFFFu);
}

}  // namespace

Rgb viridis(double t) {
  if (t < 0.0) t = 0.0;
  if (t > 1.0) t = 1.0;
  const double pos = t * (kViridisAnchors.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = lo + 1 < kViridisAnchors.size() ? lo + 1 : lo;
  const double frac = pos - static_cast<double>(lo);
  const Rgb a = kViridisAnchors[lo];
  const Rgb b = kViridisAnchors[hi];
  Rgb out;
  out.r = static_cast<std::uint8_t>(a.r + frac * (b.r - a.r) + 0.5);
  out.g = static_cast<std::uint8_t>(a.g + frac * (b.g - a.g) + 0.5);
  out.b = static_cast<std::uint8_t>(a.b + frac * (b.b - a.b) + 0.5);
  return out;
}

void write_png_rgb(const std::string& path, int width, int height,
                   const std::vector<std::uint8_t>& data) {
  if (width < 1 || height < 1 ||
      data.size() != static_cast<std::size_t>(width) * height * 3) {
    throw std::invalid_argument("image dimensions do not match data");
  }
  // Raw scanlines, filter byte 0 per row.
  std::vector<std::uint8_t> raw;
  raw.reserve(static_cast<std::size_t>(height) * (1 + static_cast<std::size_t>(width) * 3));
  for (int y = 0; y < height; ++y) {
    raw.push_back(0);
    const std::uint8_t* row = data.data() + static_cast<std::size_t>(y) * width * 3;
    raw.insert(raw.end(), row, row + static_cast<std::size_t>(width) * 3);
  }

  // zlib stream with stored (uncompressed) deflate blocks.
  std::vector<std::uint8_t> z;
  z.push_back(0x78);
  z.push_back(0x01);
  std::size_t offset = 0;
  while (offset < raw.size()) {
    const std::size_t chunk = std::min<std::size_t>(65535, raw.size() - offset);
    const bool final = offset + chunk == raw.size();
    z.push_back(final ? 1 : 0);
    z.push_back(chunk & 0xFF);
    z.push_back((chunk >> 8) & 0xFF);
    z.push_back(~chunk & 0xFF);
    z.push_back((~chunk >> 8) & 0xFF);
    z.insert(z.end(), raw.begin() + offset, raw.begin() + offset + chunk);
    offset += chunk;
  }
  put_u32_be(z, adler32(raw.data(), raw.size()));

  std::vector<std::uint8_t> png = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
  std::vector<std::uint8_t> ihdr;
  put_u32_be(ihdr, static_cast<std::uint32_t>(width));
  put_u32_be(ihdr, static_cast<std::uint32_t>(height));
  ihdr.push_back(8);   // bit depth
  ihdr.push_back(2);   // color type RGB
  ihdr.push_back(0);   // compression
  ihdr.push_back(0);   // filter
  ihdr.push_back(0);   // interlace
  put_chunk(png, "IHDR", ihdr);
  put_chunk(png, "IDAT", z);
  put_chunk(png, "IEND", {});

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write PNG: " + path);
  f.write(reinterpret_cast<const char*>(png.data()), static_cast<std::streamsize>(png.size()));
  if (!f) throw std::runtime_error("short write: " + path);
}

}  // namespace protosound
