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
#include "protosound/protonet.hpp"

namespace protosound {

// Inclusive cell bounds in spectrogram coordinates.
struct Box {
  int f_lo = 0, f_hi = 0, t_lo = 0, t_hi = 0;

  int height() const { return f_hi - f_lo + 1; }
  int width() const { return t_hi - t_lo + 1; }
};

// One retrieved training exemplar for a prototype.
struct ProjectionEntry {
  int class_index = 0;
  int proto_index = 0;
  std::string instance_id;
  double similarity = 0.0;
  std::pair<int, int> argmax_cell;  // (h, w) in embedding cells
  Box box;                          // in spectrogram coordinates
};

// A prototype's similarity map upscaled to spectrogram resolution. Bilinear,
// with embedding cell centers aligned to stride-block centers so the heatmap
// peak sits exactly on a cell-center pixel.
struct Heatmap {
  std::vector<double> values;  // mel_bins x frames, in [-1, 1]
  int mel_bins = 0;
  int frames = 0;
  int class_index = 0;
  int proto_index = 0;
  std::string instance_id;

  double at(int f, int t) const { return values[static_cast<std::size_t>(f) * frames + t]; }
};

// For each prototype, the K training instances with the largest pooled
// similarity (ties by ascending instance id), each with its argmax cell and
// 95th-percentile box. mel_bins/frames give the spectrogram geometry of the
// corpus (every clip has the same shape). K > dataset size returns all.
std::vector<ProjectionEntry> project(
    const PrototypeBank& bank,
    const std::vector<std::pair<std::string, EmbeddingMap>>& training, int k,
    int mel_bins, int frames);

Heatmap upscale_similarity(const EmbeddingMap& z, const PrototypeBank& bank, int c, int j,
                           int mel_bins, int frames);

// Tight bounding box of cells strictly above the q-quantile (linear
// interpolation order statistic) of the heatmap. A constant heatmap yields
// the full frame and sets *constant to true.
Box percentile_box(const Heatmap& h, double q = 0.95, bool* constant = nullptr);

struct Contribution {
  int class_index = 0;
  int proto_index = 0;
  double pooled = 0.0;
  double weight = 0.0;
  double contribution = 0.0;  // weight * pooled
  std::pair<int, int> argmax_cell;
  Box box;
};

struct Explanation {
  Prediction prediction;
  std::vector<Contribution> top;  // ranked by contribution, descending
};

// Local explanation: the top_m (prototype, similarity, weight, class) triples
// ranked by their weight * similarity contribution to the logits.
Explanation explain_prediction(const Spectrogram& s, const EmbeddingMap& z,
                               const PrototypeBank& bank, int top_m);

// Rendering helpers. PNGs have exactly the spectrogram's dimensions; the
// frequency axis is flipped so low mel bins are at the bottom.
void render_heatmap_png(const std::string& path, const Spectrogram& s, const Heatmap& h,
                        const Box* box);
void render_overlay_png(const std::string& path, const Spectrogram& s, const Box& box);
void write_box_csv(const std::string& path, int class_index, int proto_index,
                   const std::string& instance_id, double similarity, const Box& box);

// Griffin-Lim audio of the boxed region: columns t_lo..t_hi, with rows outside
// the box silenced, padded to the full mel extent.
Waveform render_box_audio(const Spectrogram& unstandardized, const DspConfig& cfg,
                          const Box& box, int iterations, std::uint64_t seed);

}  // namespace protosound
