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

#include <string>

#include "protosound/dsp.hpp"

namespace protosound {

// Reads PCM 16/24/32-bit or float32 WAV. Multichannel input is averaged to
// mono. Throws std::runtime_error on malformed files.
Waveform read_wav(const std::string& path);

// Writes mono float32 WAV.
void write_wav(const std::string& path, const Waveform& w);

}  // namespace protosound
