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

#include "protosound/dsp.hpp"
#include "protosound/rng.hpp"

namespace protosound {

// Training-time stochastic augmentations. The per-instance application order
// is fixed: time shift, background noise, colored noise, gain, mixup, no-call
// swap on waveforms; frequency mask then time mask on standardized
// spectrograms. Everything is a pure function of (inputs, rng stream).
struct AugmentConfig {
  double p_time_shift = 1.0;
  double p_background = 0.5;
  double p_colored_noise = 0.2;
  double p_gain = 0.2;
  double p_mixup = 0.8;
  double p_nocall = 0.075;
  double p_freq_mask = 0.5;
  double p_time_mask = 0.3;
  int mixup_max_partners = 3;
  double shift_window_seconds = 8.0;
  double gain_db_min = -12.0;
  double gain_db_max = 12.0;
  double mask_max_fraction = 0.2;
  double background_snr_db_min = 3.0;
  double background_snr_db_max = 30.0;
  double colored_snr_db_min = 10.0;
  double colored_snr_db_max = 40.0;
  std::string background_dir;  // WAV directory for background noise
  std::string nocall_dir;      // WAV directory for no-call instances
  std::uint64_t seed = 0;

  bool is_identity() const;
  void validate() const;
};

struct LabeledClip {
  Waveform waveform;
  std::vector<std::uint8_t> labels;  // {0,1}^C
};

struct NoisePools {
  std::vector<Waveform> background;
  std::vector<Waveform> nocall;
};

// Uniformly random clip-length crop of the context window. If the context is
// shorter than the clip it is zero-padded at the end first. Labels unchanged.
LabeledClip time_shift(const LabeledClip& clip, const Waveform& context,
                       const AugmentConfig& cfg, Rng& rng);

// clip + g * noise with g chosen so the SNR is uniform in the configured
// range. Empty pool is a no-op. Labels unchanged.
LabeledClip mix_background(const LabeledClip& clip, const std::vector<Waveform>& pool,
                           const AugmentConfig& cfg, Rng& rng);

// Adds 1/f^alpha noise, alpha uniform in [0, 2], at the configured SNR range.
LabeledClip colored_noise(const LabeledClip& clip, const AugmentConfig& cfg, Rng& rng);

// Multiplies the amplitude by 10^(dB/20), dB uniform in the configured range.
LabeledClip gain(const LabeledClip& clip, const AugmentConfig& cfg, Rng& rng);

// Per selected instance, mixes k in {2..mixup_max_partners} batch members by
// a weighted waveform sum (weights uniform on the simplex); labels combine by
// element-wise OR (hard labels).
std::vector<LabeledClip> mixup(const std::vector<LabeledClip>& batch,
                               const AugmentConfig& cfg, Rng& rng);

// Replaces the clip with a pool instance and an all-zero label vector.
LabeledClip nocall_swap(const LabeledClip& clip, const std::vector<Waveform>& pool,
                        const AugmentConfig& cfg, Rng& rng);

// Frequency and time masking on a standardized spectrogram; masked cells are
// set to 0 (the standardized mean).
Spectrogram spec_masks(const Spectrogram& s, const AugmentConfig& cfg, Rng& rng);

// Full waveform-stage pipeline for one batch. contexts[i] may be empty
// (sample count 0), in which case the clip itself is the shift context.
std::vector<LabeledClip> augment_waveform_batch(const std::vector<LabeledClip>& batch,
                                                const std::vector<Waveform>& contexts,
                                                const NoisePools& pools,
                                                const AugmentConfig& cfg,
                                                std::uint64_t epoch,
                                                std::uint64_t batch_index);

}  // namespace protosound
