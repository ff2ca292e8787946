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

#include "protosound/augment.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>

#include "protosound/kernels.hpp"

namespace protosound {

namespace {

constexpr double kPi = 3.14159265358979323846;

double rms(const std::vector<double>& x) {
  if (x.empty()) return 0.0;
  return std::sqrt(kernels::sum_squares(x.data(), x.size()) / static_cast<double>(x.size()));
}

// Crops (with wraparound) or zero-pads the source to exactly n samples,
// starting from a random offset.
std::vector<double> fit_to_length(const std::vector<double>& src, std::size_t n, Rng& rng) {
  std::vector<double> out(n, 0.0);
  if (src.empty()) return out;
  if (src.size() >= n) {
    const std::size_t start = rng.below(src.size() - n + 1);
    std::copy(src.begin() + start, src.begin() + start + n, out.begin());
  } else {
    std::copy(src.begin(), src.end(), out.begin());
  }
  return out;
}

void check_probability(double p, const char* name) {
  if (p < 0.0 || p > 1.0) {
    throw std::invalid_argument(std::string(name) + " must be in [0, 1]");
  }
}

}  // namespace

bool AugmentConfig::is_identity() const {
  return p_time_shift == 0.0 && p_background == 0.0 && p_colored_noise == 0.0 &&
         p_gain == 0.0 && p_mixup == 0.0 && p_nocall == 0.0 && p_freq_mask == 0.0 &&
         p_time_mask == 0.0;
}

void AugmentConfig::validate() const {
  check_probability(p_time_shift, "p_time_shift");
  check_probability(p_background, "p_background");
  check_probability(p_colored_noise, "p_colored_noise");
  check_probability(p_gain, "p_gain");
  check_probability(p_mixup, "p_mixup");
  check_probability(p_nocall, "p_nocall");
  check_probability(p_freq_mask, "p_freq_mask");
  check_probability(p_time_mask, "p_time_mask");
  if (mixup_max_partners < 2) throw std::invalid_argument("mixup_max_partners must be >= 2");
  if (shift_window_seconds <= 0.0) {
    throw std::invalid_argument("shift_window_seconds must be positive");
  }
  if (mask_max_fraction < 0.0 || mask_max_fraction > 1.0) {
    throw std::invalid_argument("mask_max_fraction must be in [0, 1]");
  }
  if (gain_db_min > gain_db_max) throw std::invalid_argument("gain range inverted");
  if (background_snr_db_min > background_snr_db_max ||
      colored_snr_db_min > colored_snr_db_max) {
    throw std::invalid_argument("SNR range inverted");
  }
}

LabeledClip time_shift(const LabeledClip& clip, const Waveform& context,
                       const AugmentConfig& cfg, Rng& rng) {
  (void)cfg;
  const std::size_t clip_len = clip.waveform.samples.size();
  LabeledClip out = clip;
  const std::vector<double>& window = context.samples.empty() ? clip.waveform.samples
                                                              : context.samples;
  if (window.size() <= clip_len) {
    // Degenerate window: zero-pad to clip length; the only crop is the window itself.
    out.waveform.samples.assign(clip_len, 0.0);
    std::copy(window.begin(), window.end(), out.waveform.samples.begin());
    return out;
  }
  const std::size_t start = rng.below(window.size() - clip_len + 1);
  out.waveform.samples.assign(window.begin() + start, window.begin() + start + clip_len);
  return out;
}

LabeledClip mix_background(const LabeledClip& clip, const std::vector<Waveform>& pool,
                           const AugmentConfig& cfg, Rng& rng) {
  if (pool.empty()) return clip;  // skip; caller warns
  LabeledClip out = clip;
  const Waveform& noise_src = pool[rng.below(pool.size())];
  std::vector<double> noise = fit_to_length(noise_src.samples, clip.waveform.samples.size(), rng);
  const double snr_db = rng.uniform(cfg.background_snr_db_min, cfg.background_snr_db_max);
  const double noise_rms = rms(noise);
  const double g = noise_rms > 1e-12
                       ? rms(clip.waveform.samples) * std::pow(10.0, -snr_db / 20.0) / noise_rms
                       : 0.0;
  kernels::axpy(g, noise.data(), out.waveform.samples.data(), noise.size());
  return out;
}

LabeledClip colored_noise(const LabeledClip& clip, const AugmentConfig& cfg, Rng& rng) {
  const std::size_t n = clip.waveform.samples.size();
  if (n == 0) return clip;
  const double alpha = rng.uniform(0.0, 2.0);
  const double snr_db = rng.uniform(cfg.colored_snr_db_min, cfg.colored_snr_db_max);

  // Shape a random spectrum as f^(-alpha/2) and invert.
  std::size_t fft_n = 1;
  while (fft_n < n) fft_n <<= 1;
  std::vector<std::complex<double>> spec(fft_n, {0.0, 0.0});
  for (std::size_t k = 1; k <= fft_n / 2; ++k) {
    const double amp = std::pow(static_cast<double>(k), -alpha / 2.0);
    const double phi = rng.uniform(0.0, 2.0 * kPi);
    spec[k] = std::polar(amp, phi);
    if (k < fft_n / 2) spec[fft_n - k] = std::conj(spec[k]);
  }
  fft_inplace(spec, true);
  std::vector<double> noise(n);
  for (std::size_t i = 0; i < n; ++i) {
    noise[i] = spec[i].real();
  }
  const double noise_rms = rms(noise);
  if (noise_rms <= 1e-30) return clip;
  kernels::scale_shift(noise.data(), 1.0 / noise_rms, 0.0, noise.data(), n);

  LabeledClip out = clip;
  const double g = rms(clip.waveform.samples) * std::pow(10.0, -snr_db / 20.0);
  kernels::axpy(g, noise.data(), out.waveform.samples.data(), n);
  return out;
}

LabeledClip gain(const LabeledClip& clip, const AugmentConfig& cfg, Rng& rng) {
  const double db = rng.uniform(cfg.gain_db_min, cfg.gain_db_max);
  const double factor = std::pow(10.0, db / 20.0);
  LabeledClip out = clip;
  kernels::scale_shift(clip.waveform.samples.data(), factor, 0.0,
                       out.waveform.samples.data(), out.waveform.samples.size());
  return out;
}

std::vector<LabeledClip> mixup(const std::vector<LabeledClip>& batch,
                               const AugmentConfig& cfg, Rng& rng) {
  if (batch.size() < 2) return batch;
  std::vector<LabeledClip> out;
  out.reserve(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (!rng.bernoulli(cfg.p_mixup)) {
      out.push_back(batch[i]);
      continue;
    }
    const int max_k = std::min<int>(cfg.mixup_max_partners, static_cast<int>(batch.size()));
    const int k = 2 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_k - 1)));
    std::vector<std::size_t> members{i};
    while (static_cast<int>(members.size()) < k) {
      const std::size_t cand = rng.below(batch.size());
      if (std::find(members.begin(), members.end(), cand) == members.end()) {
        members.push_back(cand);
      }
    }
    // Weights uniform on the simplex (normalized exponentials).
    std::vector<double> weights(members.size());
    double total = 0.0;
    for (double& w : weights) {
      double u;
      do {
        u = rng.uniform();
      } while (u <= 0.0);
      w = -std::log(u);
      total += w;
    }
    LabeledClip mixed;
    mixed.waveform.sample_rate = batch[i].waveform.sample_rate;
    mixed.waveform.samples.assign(batch[i].waveform.samples.size(), 0.0);
    mixed.labels.assign(batch[i].labels.size(), 0);
    for (std::size_t m = 0; m < members.size(); ++m) {
      const LabeledClip& part = batch[members[m]];
      kernels::axpy(weights[m] / total, part.waveform.samples.data(),
                    mixed.waveform.samples.data(),
                    std::min(mixed.waveform.samples.size(), part.waveform.samples.size()));
      for (std::size_t c = 0; c < mixed.labels.size(); ++c) {
        mixed.labels[c] = mixed.labels[c] | part.labels[c];
      }
    }
    out.push_back(std::move(mixed));
  }
  return out;
}

LabeledClip nocall_swap(const LabeledClip& clip, const std::vector<Waveform>& pool,
                        const AugmentConfig& cfg, Rng& rng) {
  (void)cfg;
  if (pool.empty()) return clip;  // skip; caller warns
  LabeledClip out;
  const Waveform& src = pool[rng.below(pool.size())];
  out.waveform.sample_rate = clip.waveform.sample_rate;
  out.waveform.samples = fit_to_length(src.samples, clip.waveform.samples.size(), rng);
  out.labels.assign(clip.labels.size(), 0);
  return out;
}

Spectrogram spec_masks(const Spectrogram& s, const AugmentConfig& cfg, Rng& rng) {
  if (!s.standardized) throw std::invalid_argument("spec_masks requires standardized input");
  Spectrogram out = s;
  if (rng.bernoulli(cfg.p_freq_mask)) {
    const int max_width = static_cast<int>(cfg.mask_max_fraction * s.mel_bins);
    const int width = max_width > 0 ? static_cast<int>(rng.below(max_width + 1)) : 0;
    if (width > 0) {
      const int start = static_cast<int>(rng.below(s.mel_bins - width + 1));
      for (int m = start; m < start + width; ++m) {
        for (int t = 0; t < s.frames; ++t) {
          out.at(m, t) = 0.0;
        }
      }
    }
  }
  if (rng.bernoulli(cfg.p_time_mask)) {
    const int max_width = static_cast<int>(cfg.mask_max_fraction * s.frames);
    const int width = max_width > 0 ? static_cast<int>(rng.below(max_width + 1)) : 0;
    if (width > 0) {
      const int start = static_cast<int>(rng.below(s.frames - width + 1));
      for (int m = 0; m < s.mel_bins; ++m) {
        for (int t = start; t < start + width; ++t) {
          out.at(m, t) = 0.0;
        }
      }
    }
  }
  return out;
}

std::vector<LabeledClip> augment_waveform_batch(const std::vector<LabeledClip>& batch,
                                                const std::vector<Waveform>& contexts,
                                                const NoisePools& pools,
                                                const AugmentConfig& cfg,
                                                std::uint64_t epoch,
                                                std::uint64_t batch_index) {
  cfg.validate();
  std::vector<LabeledClip> stage;
  stage.reserve(batch.size());
  static const Waveform kNoContext{};
  for (std::size_t i = 0; i < batch.size(); ++i) {
    Rng rng = Rng::substream(cfg.seed, {epoch, batch_index, i});
    LabeledClip clip = batch[i];
    const Waveform& context = i < contexts.size() ? contexts[i] : kNoContext;
    if (rng.bernoulli(cfg.p_time_shift)) clip = time_shift(clip, context, cfg, rng);
    if (rng.bernoulli(cfg.p_background)) clip = mix_background(clip, pools.background, cfg, rng);
    if (rng.bernoulli(cfg.p_colored_noise)) clip = colored_noise(clip, cfg, rng);
    if (rng.bernoulli(cfg.p_gain)) clip = gain(clip, cfg, rng);
    stage.push_back(std::move(clip));
  }
  Rng batch_rng = Rng::substream(cfg.seed, {epoch, batch_index, 0xb17c4});
  stage = mixup(stage, cfg, batch_rng);
  for (std::size_t i = 0; i < stage.size(); ++i) {
    Rng rng = Rng::substream(cfg.seed, {epoch, batch_index, i, 0x70c411});
    if (rng.bernoulli(cfg.p_nocall)) stage[i] = nocall_swap(stage[i], pools.nocall, cfg, rng);
  }
  return stage;
}

}  // namespace protosound
