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

#include <complex>
#include <cstdint>
#include <vector>

namespace protosound {

struct Waveform {
  std::vector<double> samples;
  int sample_rate = 0;

  double duration_seconds() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
};

// Log-mel grid, mel_bins x frames row-major (row = mel bin, column = frame).
struct Spectrogram {
  std::vector<double> values;
  int mel_bins = 0;
  int frames = 0;
  bool standardized = false;
  double frame_hop_seconds = 0.0;
  std::vector<double> mel_edges;  // Hz, strictly increasing, mel_bins + 2 entries

  double& at(int mel, int frame) { return values[static_cast<std::size_t>(mel) * frames + frame]; }
  double at(int mel, int frame) const {
    return values[static_cast<std::size_t>(mel) * frames + frame];
  }
};

struct DspConfig {
  int sample_rate = 32000;
  int fft_size = 2048;
  int hop = 256;
  int mel_bins = 256;
  double clip_seconds = 5.0;
  double zscore_mean = -13.369;
  double zscore_std = 13.162;

  int stft_bins() const { return fft_size / 2 + 1; }
  int clip_samples() const;
  int frames_for(std::size_t num_samples) const;  // centered STFT: 1 + floor(n/hop)
  void validate() const;
};

// HTK mel scale.
double hz_to_mel(double hz);
double mel_to_hz(double mel);

// Triangular mel filterbank with unit-peak filters spanning 0..sample_rate/2.
// Filters are stored sparsely: filter m covers STFT bins
// [first_bin[m], first_bin[m] + weights[m].size()).
struct MelFilterbank {
  std::vector<int> first_bin;
  std::vector<std::vector<double>> weights;
  std::vector<double> edges_hz;  // mel_bins + 2

  static MelFilterbank build(int mel_bins, int fft_size, int sample_rate);
  // mel[m] = sum_k weights[m][k] * power[first_bin[m] + k]
  void apply(const double* power, double* mel) const;
  // power[k] += sum_m weights over transposed filters (used as NNLS operator).
  void apply_transposed(const double* mel, double* power, int stft_bins) const;
};

// In-place iterative radix-2 FFT; size must be a power of two.
void fft_inplace(std::vector<std::complex<double>>& x, bool inverse);

// Splits into consecutive non-overlapping clips of clip_seconds; the final
// remainder clip is zero-padded to full length. Throws on empty input.
std::vector<Waveform> segment(const Waveform& w, double clip_seconds);

// STFT (Hann window, centered with reflect padding) -> power mel projection
// -> natural log with floor 1e-10. Requires w to be exactly one clip long.
Spectrogram logmel(const Waveform& w, const DspConfig& cfg);

// z-score with the config constants. standardize errors on already-standardized
// input; unstandardize errors on raw input.
Spectrogram standardize(const Spectrogram& s, const DspConfig& cfg);
Spectrogram unstandardize(const Spectrogram& s, const DspConfig& cfg);

// Inverts an unstandardized log-mel grid to audio: non-negative least squares
// against the mel filterbank recovers linear-frequency magnitudes, then
// iterative phase reconstruction. Deterministic for a fixed seed. If
// spectral_errors is non-null it receives the per-iteration magnitude error.
Waveform griffin_lim(const Spectrogram& s, const DspConfig& cfg, int iterations,
                     std::uint64_t seed, std::vector<double>* spectral_errors = nullptr);

}  // namespace protosound
