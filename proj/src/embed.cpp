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

#include "protosound/embed.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "protosound/kernels.hpp"
#include "protosound/rng.hpp"

namespace protosound {

namespace {

constexpr char kMagic[4] = {'A', 'P', 'E', 'M'};
constexpr std::uint32_t kVersion = 1;
// Guards against nonsense headers before allocating.
constexpr std::uint64_t kMaxCells = 1ULL << 31;

int conv_out_dim(int in, int kernel, int stride) {
  if (in < kernel) return 0;
  return (in - kernel) / stride + 1;
}

// Orthogonal initialization: Gaussian matrix, then Gram-Schmidt on whichever
// side fits (rows if rows <= cols, columns otherwise).
std::vector<double> orthogonal_matrix(int rows, int cols, Rng& rng) {
  std::vector<double> a(static_cast<std::size_t>(rows) * cols);
  for (double& v : a) {
    v = rng.normal();
  }
  const bool by_rows = rows <= cols;
  const int vectors = by_rows ? rows : cols;
  const int dim = by_rows ? cols : rows;
  auto at = [&](int vec, int i) -> double& {
    return by_rows ? a[static_cast<std::size_t>(vec) * cols + i]
                   : a[static_cast<std::size_t>(i) * cols + vec];
  };
  for (int v = 0; v < vectors; ++v) {
    for (int u = 0; u < v; ++u) {
      double proj = 0.0;
      for (int i = 0; i < dim; ++i) {
        proj += at(v, i) * at(u, i);
      }
      for (int i = 0; i < dim; ++i) {
        at(v, i) -= proj * at(u, i);
      }
    }
    double norm = 0.0;
    for (int i = 0; i < dim; ++i) {
      norm += at(v, i) * at(v, i);
    }
    norm = std::sqrt(norm);
    if (norm < 1e-12) norm = 1.0;
    for (int i = 0; i < dim; ++i) {
      at(v, i) /= norm;
    }
  }
  return a;
}

void write_u32(std::ofstream& f, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xFF),
                        static_cast<unsigned char>((v >> 8) & 0xFF),
                        static_cast<unsigned char>((v >> 16) & 0xFF),
                        static_cast<unsigned char>((v >> 24) & 0xFF)};
  f.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::ifstream& f, const char* what) {
  unsigned char b[4];
  f.read(reinterpret_cast<char*>(b), 4);
  if (!f) throw std::runtime_error(std::string("truncated payload: ") + what);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

ToyBackboneConfig ToyBackboneConfig::defaults() {
  ToyBackboneConfig cfg;
  cfg.layers = {{3, 3, 2, 16}, {3, 3, 2, 32}, {3, 3, 2, 64}, {3, 3, 2, 128}};
  return cfg;
}

void ToyBackboneConfig::validate() const {
  if (layers.empty()) throw std::invalid_argument("backbone needs at least one layer");
  for (const auto& layer : layers) {
    if (layer.kernel_h < 1 || layer.kernel_w < 1 || layer.stride < 1 || layer.out_channels < 1) {
      throw std::invalid_argument("invalid conv layer spec");
    }
  }
}

ToyBackbone::ToyBackbone(const ToyBackboneConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  int in_ch = 1;
  bool first = true;
  for (const auto& spec : cfg.layers) {
    Layer layer;
    layer.kh = spec.kernel_h;
    layer.kw = spec.kernel_w;
    layer.stride = spec.stride;
    layer.in_ch = in_ch;
    layer.out_ch = spec.out_channels;
    const int fan_in = layer.kh * layer.kw * in_ch;
    const auto matrix = orthogonal_matrix(layer.out_ch, fan_in, rng);
    layer.weights.resize(layer.out_ch);
    for (int oc = 0; oc < layer.out_ch; ++oc) {
      layer.weights[oc].assign(matrix.begin() + static_cast<std::size_t>(oc) * fan_in,
                               matrix.begin() + static_cast<std::size_t>(oc + 1) * fan_in);
      if (first) {
        // Zero-mean first-layer filters: a constant patch (silence floor)
        // maps to a zero cell, so features respond to structure, not level.
        double mean = 0.0;
        for (double wv : layer.weights[oc]) {
          mean += wv;
        }
        mean /= fan_in;
        for (double& wv : layer.weights[oc]) {
          wv -= mean;
        }
      }
    }
    layers_.push_back(std::move(layer));
    in_ch = spec.out_channels;
    first = false;
  }
}

int ToyBackbone::cumulative_stride() const {
  int s = 1;
  for (const auto& layer : layers_) {
    s *= layer.stride;
  }
  return s;
}

int ToyBackbone::output_channels() const { return layers_.back().out_ch; }

int ToyBackbone::receptive_field() const {
  int rf = 1;
  int jump = 1;
  for (const auto& layer : layers_) {
    rf += (std::max(layer.kh, layer.kw) - 1) * jump;
    jump *= layer.stride;
  }
  return rf;
}

std::pair<int, int> ToyBackbone::output_dims(int mel_bins, int frames) const {
  int h = mel_bins;
  int w = frames;
  for (const auto& layer : layers_) {
    h = conv_out_dim(h, layer.kh, layer.stride);
    w = conv_out_dim(w, layer.kw, layer.stride);
    if (h < 1 || w < 1) {
      throw std::invalid_argument("spectrogram smaller than the backbone receptive field");
    }
  }
  return {h, w};
}

EmbeddingMap ToyBackbone::extract(const Spectrogram& s) const {
  if (!s.standardized) throw std::invalid_argument("extract requires standardized input");
  output_dims(s.mel_bins, s.frames);  // validates size up front

  // Channel-last activation grid, starting from the spectrogram as one channel.
  std::vector<double> current = s.values;
  int h = s.mel_bins, w = s.frames, ch = 1;

  for (std::size_t li = 0; li < layers_.size(); ++li) {
    const Layer& layer = layers_[li];
    const int oh = conv_out_dim(h, layer.kh, layer.stride);
    const int ow = conv_out_dim(w, layer.kw, layer.stride);
    std::vector<double> next(static_cast<std::size_t>(oh) * ow * layer.out_ch);
    const std::size_t row_span = static_cast<std::size_t>(layer.kw) * ch;
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        double* out_cell = next.data() + (static_cast<std::size_t>(oy) * ow + ox) * layer.out_ch;
        const std::size_t base =
            (static_cast<std::size_t>(oy) * layer.stride * w + ox * layer.stride) * ch;
        for (int oc = 0; oc < layer.out_ch; ++oc) {
          const double* wrow = layer.weights[oc].data();
          double acc = 0.0;
          for (int ky = 0; ky < layer.kh; ++ky) {
            acc += kernels::dot(current.data() + base + static_cast<std::size_t>(ky) * w * ch,
                                wrow + static_cast<std::size_t>(ky) * row_span, row_span);
          }
          out_cell[oc] = acc;
        }
      }
    }
    // Rectifier between layers; the final layer stays linear so cell
    // features are signed, as embedding-stage features of real backbones
    // are. All-rectified outputs share a large positive component that
    // compresses the cosine range.
    if (li + 1 < layers_.size()) {
      kernels::clamp_min(next.data(), 0.0, next.size());
    }
    current = std::move(next);
    h = oh;
    w = ow;
    ch = layer.out_ch;
  }

  EmbeddingMap out;
  out.values = std::move(current);
  out.h = h;
  out.w = w;
  out.d = ch;
  out.stride_freq = cumulative_stride();
  out.stride_time = cumulative_stride();
  out.offset_freq = (receptive_field() - 1) / 2;
  out.offset_time = out.offset_freq;
  return out;
}

std::uint64_t ToyBackbone::weight_checksum() const {
  std::uint64_t acc = 0xcbf29ce484222325ULL;
  auto mix = [&acc](std::uint64_t bits) {
    acc ^= bits;
    acc *= 0x100000001b3ULL;
  };
  for (const auto& layer : layers_) {
    for (const auto& row : layer.weights) {
      for (double v : row) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof(bits));
        mix(bits);
      }
    }
  }
  return acc;
}

void save_embeddings(const std::string& path,
                     const std::vector<std::pair<std::string, EmbeddingMap>>& items) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write embedding store: " + path);
  f.write(kMagic, 4);
  write_u32(f, kVersion);
  write_u32(f, static_cast<std::uint32_t>(items.size()));
  for (const auto& [id, map] : items) {
    write_u32(f, static_cast<std::uint32_t>(id.size()));
    f.write(id.data(), static_cast<std::streamsize>(id.size()));
    write_u32(f, static_cast<std::uint32_t>(map.h));
    write_u32(f, static_cast<std::uint32_t>(map.w));
    write_u32(f, static_cast<std::uint32_t>(map.d));
    write_u32(f, static_cast<std::uint32_t>(map.stride_freq));
    write_u32(f, static_cast<std::uint32_t>(map.stride_time));
    for (double v : map.values) {
      const float fv = static_cast<float>(v);
      f.write(reinterpret_cast<const char*>(&fv), 4);
    }
  }
  if (!f) throw std::runtime_error("short write: " + path);
}

std::vector<std::pair<std::string, EmbeddingMap>> load_embeddings(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open embedding store: " + path);
  char magic[4] = {};
  f.read(magic, 4);
  if (!f || std::memcmp(magic, kMagic, 4) != 0) {
    throw std::runtime_error("bad magic: " + path);
  }
  const std::uint32_t version = read_u32(f, "version");
  if (version != kVersion) {
    throw std::runtime_error("unsupported embedding store version");
  }
  const std::uint32_t n = read_u32(f, "record count");
  std::vector<std::pair<std::string, EmbeddingMap>> items;
  items.reserve(n);
  for (std::uint32_t r = 0; r < n; ++r) {
    const std::uint32_t id_len = read_u32(f, "id length");
    std::string id(id_len, '\0');
    f.read(id.data(), id_len);
    if (!f) throw std::runtime_error("truncated payload: record id");
    EmbeddingMap map;
    map.h = static_cast<int>(read_u32(f, "h"));
    map.w = static_cast<int>(read_u32(f, "w"));
    map.d = static_cast<int>(read_u32(f, "d"));
    map.stride_freq = static_cast<int>(read_u32(f, "stride_freq"));
    map.stride_time = static_cast<int>(read_u32(f, "stride_time"));
    if (map.h < 1 || map.w < 1 || map.d < 1) {
      throw std::runtime_error("dimension overflow: non-positive dims");
    }
    const std::uint64_t count = static_cast<std::uint64_t>(map.h) * map.w * map.d;
    if (count > kMaxCells) {
      throw std::runtime_error("dimension overflow: record too large");
    }
    map.values.resize(count);
    for (std::uint64_t i = 0; i < count; ++i) {
      float fv;
      f.read(reinterpret_cast<char*>(&fv), 4);
      if (!f) throw std::runtime_error("truncated payload: values");
      map.values[i] = fv;
    }
    items.emplace_back(std::move(id), std::move(map));
  }
  return items;
}

}  // namespace protosound
