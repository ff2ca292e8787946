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

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace protosound {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
};

// Viridis-style colormap, t in [0, 1].
Rgb viridis(double t);

// Minimal RGB8 PNG writer (zlib stream with stored deflate blocks). data is
// row-major, 3 bytes per pixel, top row first.
void write_png_rgb(const std::string& path, int width, int height,
                   const std::vector<std::uint8_t>& data);

}  // namespace protosound
