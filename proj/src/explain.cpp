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

#include "protosound/explain.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "protosound/image.hpp"

namespace protosound {

namespace {

// Linear-interpolation order statistic.
double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile of empty set");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

std::vector<std::uint8_t> spectrogram_grayscale(const Spectrogram& s) {
  double lo = s.values[0], hi = s.values[0];
  for (double v : s.values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double span = hi - lo > 1e-12 ? hi - lo : 1.0;
  std::vector<std::uint8_t> gray(s.values.size());
  for (std::size_t i = 0; i < s.values.size(); ++i) {
    gray[i] = static_cast<std::uint8_t>(255.0 * (s.values[i] - lo) / span + 0.5);
  }
  return gray;
}

void draw_box_border(std::vector<std::uint8_t>& rgb, int width, int height, const Box& box) {
  // Orange border; image rows are flipped (low mel at the bottom).
  const Rgb orange{255, 140, 0};
  auto paint = [&](int f, int t) {
    const int y = height - 1 - f;
    if (y < 0 || y >= height || t < 0 || t >= width) return;
    const std::size_t idx = (static_cast<std::size_t>(y) * width + t) * 3;
    rgb[idx] = orange.r;
    rgb[idx + 1] = orange.g;
    rgb[idx + 2] = orange.b;
  };
  for (int t = box.t_lo; t <= box.t_hi; ++t) {
    paint(box.f_lo, t);
    paint(box.f_hi, t);
  }
  for (int f = box.f_lo; f <= box.f_hi; ++f) {
    paint(f, box.t_lo);
    paint(f, box.t_hi);
  }
}

}  // namespace

Heatmap upscale_similarity(const EmbeddingMap& z, const PrototypeBank& bank, int c, int j,
                           int mel_bins, int frames) {
  if (z.stride_freq < 1 || z.stride_time < 1) {
    throw std::invalid_argument("stride metadata missing");
  }
  if (c < 0 || c >= bank.num_classes || j < 0 || j >= bank.per_class) {
    throw std::invalid_argument("prototype index out of range");
  }
  const SimilarityResult sim = similarity(z, bank);
  const double* map = sim.map(c, j);

  Heatmap out;
  out.mel_bins = mel_bins;
  out.frames = frames;
  out.class_index = c;
  out.proto_index = j;
  out.values.resize(static_cast<std::size_t>(mel_bins) * frames);

  // Cell i's center lands on pixel offset + stride*i (the receptive-field
  // center when known); clamp at the rim.
  const int off_f = z.center_freq_offset();
  const int off_t = z.center_time_offset();
  for (int f = 0; f < mel_bins; ++f) {
    double u = (static_cast<double>(f) - off_f) / z.stride_freq;
    u = std::clamp(u, 0.0, static_cast<double>(z.h - 1));
    const int u0 = static_cast<int>(u);
    const int u1 = std::min(u0 + 1, z.h - 1);
    const double uf = u - u0;
    for (int t = 0; t < frames; ++t) {
      double v = (static_cast<double>(t) - off_t) / z.stride_time;
      v = std::clamp(v, 0.0, static_cast<double>(z.w - 1));
      const int v0 = static_cast<int>(v);
      const int v1 = std::min(v0 + 1, z.w - 1);
      const double vf = v - v0;
      const double a = map[u0 * z.w + v0];
      const double b = map[u0 * z.w + v1];
      const double cc = map[u1 * z.w + v0];
      const double d = map[u1 * z.w + v1];
      out.values[static_cast<std::size_t>(f) * frames + t] =
          (1.0 - uf) * ((1.0 - vf) * a + vf * b) + uf * ((1.0 - vf) * cc + vf * d);
    }
  }
  return out;
}

Box percentile_box(const Heatmap& h, double q, bool* constant) {
  if (q < 0.0 || q > 1.0) throw std::invalid_argument("quantile must be in [0, 1]");
  const double threshold = quantile(h.values, q);
  Box box{h.mel_bins, 0, h.frames, 0};
  bool any = false;
  for (int f = 0; f < h.mel_bins; ++f) {
    for (int t = 0; t < h.frames; ++t) {
      if (h.at(f, t) > threshold) {
        any = true;
        box.f_lo = std::min(box.f_lo, f);
        box.f_hi = std::max(box.f_hi, f);
        box.t_lo = std::min(box.t_lo, t);
        box.t_hi = std::max(box.t_hi, t);
      }
    }
  }
  if (constant) *constant = !any;
  if (!any) {
    // Constant heatmap: nothing is strictly above its own quantile.
    return Box{0, h.mel_bins - 1, 0, h.frames - 1};
  }
  return box;
}

std::vector<ProjectionEntry> project(
    const PrototypeBank& bank,
    const std::vector<std::pair<std::string, EmbeddingMap>>& training, int k,
    int mel_bins, int frames) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  if (training.empty()) throw std::invalid_argument("empty training embeddings");
  const int protos = bank.num_classes * bank.per_class;

  struct Candidate {
    double similarity;
    std::size_t item;
    std::pair<int, int> cell;
  };
  std::vector<std::vector<Candidate>> per_proto(protos);
  for (std::size_t i = 0; i < training.size(); ++i) {
    const SimilarityResult sim = similarity(training[i].second, bank);
    for (int p = 0; p < protos; ++p) {
      per_proto[p].push_back({sim.pooled[p], i, sim.argmax[p]});
    }
  }

  const int take = std::min<int>(k, static_cast<int>(training.size()));
  std::vector<ProjectionEntry> entries;
  entries.reserve(static_cast<std::size_t>(protos) * take);
  for (int p = 0; p < protos; ++p) {
    auto& cands = per_proto[p];
    std::sort(cands.begin(), cands.end(), [&](const Candidate& a, const Candidate& b) {
      if (a.similarity != b.similarity) return a.similarity > b.similarity;
      return training[a.item].first < training[b.item].first;
    });
    const int c = p / bank.per_class;
    const int j = p % bank.per_class;
    for (int r = 0; r < take; ++r) {
      const Candidate& cand = cands[r];
      ProjectionEntry entry;
      entry.class_index = c;
      entry.proto_index = j;
      entry.instance_id = training[cand.item].first;
      entry.similarity = cand.similarity;
      entry.argmax_cell = cand.cell;
      const Heatmap hm =
          upscale_similarity(training[cand.item].second, bank, c, j, mel_bins, frames);
      entry.box = percentile_box(hm, 0.95);
      entries.push_back(std::move(entry));
    }
  }
  return entries;
}

Explanation explain_prediction(const Spectrogram& s, const EmbeddingMap& z,
                               const PrototypeBank& bank, int top_m) {
  if (top_m < 1) throw std::invalid_argument("top_m must be >= 1");
  const SimilarityResult sim = similarity(z, bank);
  Explanation out;
  out.prediction = predict(sim, bank);

  std::vector<Contribution> all;
  all.reserve(static_cast<std::size_t>(bank.num_classes) * bank.per_class);
  for (int c = 0; c < bank.num_classes; ++c) {
    for (int j = 0; j < bank.per_class; ++j) {
      Contribution contrib;
      contrib.class_index = c;
      contrib.proto_index = j;
      contrib.pooled = sim.pooled_at(c, j);
      contrib.weight = bank.weight(c, j);
      contrib.contribution = contrib.weight * contrib.pooled;
      contrib.argmax_cell = sim.argmax[static_cast<std::size_t>(c) * bank.per_class + j];
      all.push_back(contrib);
    }
  }
  std::stable_sort(all.begin(), all.end(), [](const Contribution& a, const Contribution& b) {
    return a.contribution > b.contribution;
  });
  const int take = std::min<int>(top_m, static_cast<int>(all.size()));
  out.top.assign(all.begin(), all.begin() + take);
  for (auto& contrib : out.top) {
    const Heatmap hm = upscale_similarity(z, bank, contrib.class_index, contrib.proto_index,
                                          s.mel_bins, s.frames);
    contrib.box = percentile_box(hm, 0.95);
  }
  return out;
}

void render_heatmap_png(const std::string& path, const Spectrogram& s, const Heatmap& h,
                        const Box* box) {
  if (h.mel_bins != s.mel_bins || h.frames != s.frames) {
    throw std::invalid_argument("heatmap/spectrogram shape mismatch");
  }
  const auto gray = spectrogram_grayscale(s);
  std::vector<std::uint8_t> rgb(static_cast<std::size_t>(s.mel_bins) * s.frames * 3);
  for (int f = 0; f < s.mel_bins; ++f) {
    const int y = s.mel_bins - 1 - f;
    for (int t = 0; t < s.frames; ++t) {
      const double heat = 0.5 * (h.at(f, t) + 1.0);  // [-1, 1] -> [0, 1]
      const Rgb color = viridis(heat);
      const double base = gray[static_cast<std::size_t>(f) * s.frames + t];
      const std::size_t idx = (static_cast<std::size_t>(y) * s.frames + t) * 3;
      rgb[idx] = static_cast<std::uint8_t>(0.5 * base + 0.5 * color.r);
      rgb[idx + 1] = static_cast<std::uint8_t>(0.5 * base + 0.5 * color.g);
      rgb[idx + 2] = static_cast<std::uint8_t>(0.5 * base + 0.5 * color.b);
    }
  }
  if (box) draw_box_border(rgb, s.frames, s.mel_bins, *box);
  write_png_rgb(path, s.frames, s.mel_bins, rgb);
}

void render_overlay_png(const std::string& path, const Spectrogram& s, const Box& box) {
  const auto gray = spectrogram_grayscale(s);
  std::vector<std::uint8_t> rgb(static_cast<std::size_t>(s.mel_bins) * s.frames * 3);
  for (int f = 0; f < s.mel_bins; ++f) {
    const int y = s.mel_bins - 1 - f;
    for (int t = 0; t < s.frames; ++t) {
      const std::uint8_t v = gray[static_cast<std::size_t>(f) * s.frames + t];
      const std::size_t idx = (static_cast<std::size_t>(y) * s.frames + t) * 3;
      rgb[idx] = rgb[idx + 1] = rgb[idx + 2] = v;
    }
  }
  draw_box_border(rgb, s.frames, s.mel_bins, box);
  write_png_rgb(path, s.frames, s.mel_bins, rgb);
}

void write_box_csv(const std::string& path, int class_index, int proto_index,
                   const std::string& instance_id, double similarity, const Box& box) {
  const bool fresh = !std::filesystem::exists(path);
  std::ofstream f(path, std::ios::app);
  if (!f) throw std::runtime_error("cannot write CSV: " + path);
  if (fresh) {
    f << "class,prototype,instance,similarity,f_lo,f_hi,t_lo,t_hi\n";
  }
  f << class_index << ',' << proto_index << ',' << instance_id << ',' << similarity << ','
    << box.f_lo << ',' << box.f_hi << ',' << box.t_lo << ',' << box.t_hi << '\n';
}

Waveform render_box_audio(const Spectrogram& unstandardized, const DspConfig& cfg,
                          const Box& box, int iterations, std::uint64_t seed) {
  if (unstandardized.standardized) throw std::invalid_argument("unstandardize first");
  if (box.f_lo < 0 || box.f_hi >= unstandardized.mel_bins || box.t_lo < 0 ||
      box.t_hi >= unstandardized.frames || box.f_lo > box.f_hi || box.t_lo > box.t_hi) {
    throw std::invalid_argument("box out of bounds");
  }
  // Patch columns only, rows outside the box silenced (log floor).
  Spectrogram patch;
  patch.mel_bins = unstandardized.mel_bins;
  patch.frames = box.width();
  patch.standardized = false;
  patch.frame_hop_seconds = unstandardized.frame_hop_seconds;
  patch.mel_edges = unstandardized.mel_edges;
  patch.values.assign(static_cast<std::size_t>(patch.mel_bins) * patch.frames,
                      std::log(1e-10));
  for (int f = box.f_lo; f <= box.f_hi; ++f) {
    for (int t = 0; t < patch.frames; ++t) {
      patch.at(f, t) = unstandardized.at(f, box.t_lo + t);
    }
  }
  return griffin_lim(patch, cfg, iterations, seed);
}

}  // namespace protosound
