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
#include <utility>
#include <vector>

#include "protosound/dsp.hpp"

namespace protosound {

// Frozen feature grid, h x w x d with channel-last layout.
struct EmbeddingMap {
  std::vector<double> values;
  int h = 0;
  int w = 0;
  int d = 0;
  int stride_freq = 1;  // spectrogram rows per cell
  int stride_time = 1;  // spectrogram columns per cell
  // Spectrogram coordinates of cell (0, 0)'s center: the receptive-field
  // center when the producing backbone is known, stride/2 otherwise (the
  // store format carries strides only). -1 = derive from the stride.
  int offset_freq = -1;
  int offset_time = -1;

  int center_freq_offset() const { return offset_freq >= 0 ? offset_freq : stride_freq / 2; }
  int center_time_offset() const { return offset_time >= 0 ? offset_time : stride_time / 2; }

  const double* cell(int y, int x) const {
    return values.data() + (static_cast<std::size_t>(y) * w + x) * d;
  }
  double* cell(int y, int x) {
    return values.data() + (static_cast<std::size_t>(y) * w + x) * d;
  }
  std::size_t cell_count() const { return static_cast<std::size_t>(h) * w; }
};

struct ConvLayerSpec {
  int kernel_h = 3;
  int kernel_w = 3;
  int stride = 2;
  int out_channels = 0;
};

struct ToyBackboneConfig {
  std::vector<ConvLayerSpec> layers;
  std::uint64_t seed = 0;

  // 4 conv layers, 3x3 kernels, stride 2, channels 16/32/64/128.
  static ToyBackboneConfig defaults();
  void validate() const;
};

// Deterministic frozen convolutional feature extractor: orthogonal-initialized
// weights from the seed, rectifier nonlinearity, valid padding so translation
// equivariance is exact in the interior.
class ToyBackbone {
 public:
  explicit ToyBackbone(const ToyBackboneConfig& cfg);

  EmbeddingMap extract(const Spectrogram& standardized) const;

  int cumulative_stride() const;
  int output_channels() const;
  int receptive_field() const;
  // For a spectrogram of the given size; throws if smaller than the
  // receptive field.
  std::pair<int, int> output_dims(int mel_bins, int frames) const;
  // Stable digest of the weights; used to verify the backbone stays frozen.
  std::uint64_t weight_checksum() const;

 private:
  struct Layer {
    int kh = 0, kw = 0, stride = 0, in_ch = 0, out_ch = 0;
    // weights[oc] is laid out [kh][kw * in_ch] to match channel-last input rows.
    std::vector<std::vector<double>> weights;
  };
  std::vector<Layer> layers_;
};

// Embedding store: binary, little-endian. Magic "APEM", u32 version = 1,
// u32 N, then per record: u32 id_len, UTF-8 id, u32 h, u32 w, u32 d,
// u32 stride_freq, u32 stride_time, h*w*d float32 values (h, w, d row-major).
void save_embeddings(const std::string& path,
                     const std::vector<std::pair<std::string, EmbeddingMap>>& items);
std::vector<std::pair<std::string, EmbeddingMap>> load_embeddings(const std::string& path);

}  // namespace protosound
