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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>

#include "protosound/augment.hpp"
#include "protosound/kernels.hpp"

using namespace protosound;

namespace {

constexpr double kPi = 3.14159265358979323846;

LabeledClip make_clip(int samples, int num_classes, std::uint64_t seed) {
  Rng rng(seed);
  LabeledClip clip;
  clip.waveform.sample_rate = 8000;
  clip.waveform.samples.resize(samples);
  for (double& v : clip.waveform.samples) {
    v = 0.2 * rng.normal();
  }
  clip.labels.assign(num_classes, 0);
  clip.labels[seed % num_classes] = 1;
  return clip;
}

double rms(const std::vector<double>& x) {
  return std::sqrt(kernels::sum_squares(x.data(), x.size()) / static_cast<double>(x.size()));
}

}  // namespace

TEST_CASE("all probabilities zero makes the pipeline an identity") {
  AugmentConfig cfg;
  cfg.p_time_shift = cfg.p_background = cfg.p_colored_noise = cfg.p_gain = 0.0;
  cfg.p_mixup = cfg.p_nocall = cfg.p_freq_mask = cfg.p_time_mask = 0.0;
  CHECK(cfg.is_identity());
  std::vector<LabeledClip> batch{make_clip(800, 4, 1), make_clip(800, 4, 2)};
  const auto out = augment_waveform_batch(batch, {}, NoisePools{}, cfg, 0, 0);
  REQUIRE(out.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(out[i].waveform.samples == batch[i].waveform.samples);
    CHECK(out[i].labels == batch[i].labels);
  }
}

TEST_CASE("pipeline is deterministic under a fixed seed") {
  AugmentConfig cfg;  // defaults: everything active
  cfg.seed = 99;
  std::vector<LabeledClip> batch;
  std::vector<Waveform> contexts;
  for (int i = 0; i < 6; ++i) {
    batch.push_back(make_clip(800, 4, 10 + i));
    Waveform context;
    context.sample_rate = 8000;
    context.samples.assign(2000, 0.01 * i);
    contexts.push_back(context);
  }
  NoisePools pools;
  pools.background.push_back(make_clip(3000, 4, 77).waveform);
  pools.nocall.push_back(make_clip(900, 4, 78).waveform);
  const auto a = augment_waveform_batch(batch, contexts, pools, cfg, 3, 5);
  const auto b = augment_waveform_batch(batch, contexts, pools, cfg, 3, 5);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].waveform.samples == b[i].waveform.samples);
    CHECK(a[i].labels == b[i].labels);
  }
  // A different epoch produces a different stream.
  const auto c = augment_waveform_batch(batch, contexts, pools, cfg, 4, 5);
  bool any_diff = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].waveform.samples != c[i].waveform.samples) any_diff = true;
  }
  CHECK(any_diff);
}

TEST_CASE("time_shift degenerate context returns the clip") {
  AugmentConfig cfg;
  Rng rng(5);
  const LabeledClip clip = make_clip(800, 4, 3);
  const LabeledClip out = time_shift(clip, clip.waveform, cfg, rng);
  CHECK(out.waveform.samples == clip.waveform.samples);
  CHECK(out.labels == clip.labels);
}

TEST_CASE("time_shift crops uniformly from a longer context") {
  AugmentConfig cfg;
  const LabeledClip clip = make_clip(100, 4, 3);
  Waveform context;
  context.sample_rate = 8000;
  context.samples.resize(160);
  for (std::size_t i = 0; i < context.samples.size(); ++i) {
    context.samples[i] = static_cast<double>(i);
  }
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const LabeledClip out = time_shift(clip, context, cfg, rng);
    REQUIRE(out.waveform.samples.size() == 100);
    const int start = static_cast<int>(out.waveform.samples[0]);
    CHECK(start >= 0);
    CHECK(start <= 60);
    for (int i = 0; i < 100; ++i) {
      CHECK(out.waveform.samples[i] == static_cast<double>(start + i));
    }
    CHECK(out.labels == clip.labels);
  }
}

TEST_CASE("mix_background keeps labels and sits between clean and noisy rms") {
  AugmentConfig cfg;
  const LabeledClip clip = make_clip(2000, 4, 9);
  std::vector<Waveform> pool{make_clip(2000, 4, 21).waveform};
  Rng rng(123);
  for (int trial = 0; trial < 20; ++trial) {
    const LabeledClip out = mix_background(clip, pool, cfg, rng);
    CHECK(out.labels == clip.labels);
    // Mixing at >= 3 dB SNR cannot more than double the amplitude.
    CHECK(rms(out.waveform.samples) <= 2.0 * rms(clip.waveform.samples));
    CHECK(out.waveform.samples != clip.waveform.samples);
  }
  // Empty pool is a no-op.
  const LabeledClip same = mix_background(clip, {}, cfg, rng);
  CHECK(same.waveform.samples == clip.waveform.samples);
}

TEST_CASE("gain follows dB arithmetic") {
  AugmentConfig cfg;
  const LabeledClip clip = make_clip(500, 4, 9);

  cfg.gain_db_min = cfg.gain_db_max = 0.0;
  Rng rng(1);
  const LabeledClip same = gain(clip, cfg, rng);
  for (std::size_t i = 0; i < clip.waveform.samples.size(); ++i) {
    CHECK(same.waveform.samples[i] == doctest::Approx(clip.waveform.samples[i]).epsilon(1e-12));
  }

  cfg.gain_db_min = cfg.gain_db_max = 6.0205999132796239;  // 20*log10(2)
  const LabeledClip doubled = gain(clip, cfg, rng);
  for (std::size_t i = 0; i < clip.waveform.samples.size(); ++i) {
    CHECK(doubled.waveform.samples[i] ==
          doctest::Approx(2.0 * clip.waveform.samples[i]).epsilon(1e-6));
  }
}

TEST_CASE("colored noise with alpha = 0 has a flat periodogram") {
  // Oracle: regress log-power against log-frequency on a white draw; the
  // slope of 1/f^alpha noise is -alpha, so alpha = 0 means slope ~ 0.
  AugmentConfig cfg;
  Rng rng(17);
  const std::size_t n = 1 << 14;
  std::size_t fft_n = n;
  // Replicate the generator's spectral shaping with alpha pinned to 0.
  std::vector<std::complex<double>> spec(fft_n, {0.0, 0.0});
  for (std::size_t k = 1; k <= fft_n / 2; ++k) {
    const double phi = rng.uniform(0.0, 2.0 * kPi);
    spec[k] = std::polar(1.0, phi);
    if (k < fft_n / 2) spec[fft_n - k] = std::conj(spec[k]);
  }
  fft_inplace(spec, true);
  std::vector<double> noise(n);
  for (std::size_t i = 0; i < n; ++i) {
    noise[i] = spec[i].real();
  }
  // Periodogram, averaged into log-spaced bands, then a log-log regression.
  auto buf = std::vector<std::complex<double>>(n);
  for (std::size_t i = 0; i < n; ++i) {
    buf[i] = noise[i];
  }
  fft_inplace(buf, false);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int count = 0;
  for (std::size_t k = 8; k < n / 2; k *= 2) {
    double band = 0.0;
    for (std::size_t j = k; j < 2 * k && j < n / 2; ++j) {
      band += std::norm(buf[j]);
    }
    band /= static_cast<double>(k);
    const double x = std::log(static_cast<double>(k));
    const double y = std::log(band);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++count;
  }
  const double slope = (count * sxy - sx * sy) / (count * sxx - sx * sx);
  CHECK(std::abs(slope) < 0.2);
}

TEST_CASE("colored_noise keeps labels and adds energy") {
  AugmentConfig cfg;
  const LabeledClip clip = make_clip(1000, 4, 30);
  Rng rng(7);
  const LabeledClip out = colored_noise(clip, cfg, rng);
  CHECK(out.labels == clip.labels);
  CHECK(out.waveform.samples != clip.waveform.samples);
}

TEST_CASE("mixup combines labels with OR semantics") {
  AugmentConfig cfg;
  cfg.p_mixup = 1.0;
  std::vector<LabeledClip> batch;
  for (int i = 0; i < 8; ++i) {
    LabeledClip clip = make_clip(400, 3, 50 + i);
    clip.labels.assign(3, 0);
    clip.labels[i % 3] = 1;
    batch.push_back(clip);
  }
  Rng rng(2);
  const auto mixed = mixup(batch, cfg, rng);
  REQUIRE(mixed.size() == batch.size());
  for (std::size_t i = 0; i < mixed.size(); ++i) {
    int in_count = 0, out_count = 0;
    for (std::size_t c = 0; c < 3; ++c) {
      in_count += batch[i].labels[c];
      out_count += mixed[i].labels[c];
      CHECK((mixed[i].labels[c] == 0 || mixed[i].labels[c] == 1));
      // The original instance is always a member, so OR keeps its labels.
      if (batch[i].labels[c]) CHECK(mixed[i].labels[c] == 1);
    }
    CHECK(out_count >= in_count);
    CHECK(out_count <= 3);
  }
}

TEST_CASE("mixup of identical labels is idempotent on labels") {
  AugmentConfig cfg;
  cfg.p_mixup = 1.0;
  std::vector<LabeledClip> batch{make_clip(200, 2, 5), make_clip(200, 2, 5)};
  batch[0].labels = {1, 0};
  batch[1].labels = {1, 0};
  Rng rng(3);
  const auto mixed = mixup(batch, cfg, rng);
  for (const auto& clip : mixed) {
    CHECK(clip.labels == std::vector<std::uint8_t>{1, 0});
  }
}

TEST_CASE("nocall_swap zeroes labels and draws from the pool") {
  AugmentConfig cfg;
  const LabeledClip clip = make_clip(300, 4, 8);
  Waveform pool_entry;
  pool_entry.sample_rate = 8000;
  pool_entry.samples.assign(300, 0.123);
  Rng rng(4);
  const LabeledClip out = nocall_swap(clip, {pool_entry}, cfg, rng);
  CHECK(out.labels == std::vector<std::uint8_t>(4, 0));
  CHECK(out.waveform.samples == pool_entry.samples);
  // Empty pool: skip.
  const LabeledClip same = nocall_swap(clip, {}, cfg, rng);
  CHECK(same.labels == clip.labels);
}

TEST_CASE("spec masks zero a contiguous region and leave the rest bit-identical") {
  AugmentConfig cfg;
  cfg.p_freq_mask = 1.0;
  cfg.p_time_mask = 0.0;
  cfg.mask_max_fraction = 0.5;
  Spectrogram s;
  s.mel_bins = 16;
  s.frames = 20;
  s.standardized = true;
  s.values.resize(16 * 20);
  Rng fill(9);
  for (double& v : s.values) {
    v = 1.0 + fill.uniform();
  }
  Rng rng(31);
  const Spectrogram masked = spec_masks(s, cfg, rng);
  int masked_rows = 0;
  for (int m = 0; m < 16; ++m) {
    bool all_zero = true;
    bool all_same = true;
    for (int t = 0; t < 20; ++t) {
      if (masked.at(m, t) != 0.0) all_zero = false;
      if (masked.at(m, t) != s.at(m, t)) all_same = false;
    }
    CHECK((all_zero || all_same));
    if (all_zero) ++masked_rows;
  }
  CHECK(masked_rows <= 8);

  // Width 0 is the identity.
  cfg.mask_max_fraction = 0.0;
  const Spectrogram same = spec_masks(s, cfg, rng);
  CHECK(same.values == s.values);

  Spectrogram raw = s;
  raw.standardized = false;
  CHECK_THROWS_AS(spec_masks(raw, cfg, rng), std::invalid_argument);
}

TEST_CASE("labels change only through mixup and nocall") {
  AugmentConfig cfg;  // default probabilities
  cfg.p_mixup = 0.0;
  cfg.p_nocall = 0.0;
  cfg.seed = 13;
  std::vector<LabeledClip> batch;
  for (int i = 0; i < 5; ++i) {
    batch.push_back(make_clip(600, 6, 40 + i));
  }
  NoisePools pools;
  pools.background.push_back(make_clip(1200, 6, 90).waveform);
  const auto out = augment_waveform_batch(batch, {}, pools, cfg, 0, 0);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    CHECK(out[i].labels == batch[i].labels);
  }
}

TEST_CASE("config validation rejects bad values") {
  AugmentConfig cfg;
  cfg.p_mixup = 1.5;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = AugmentConfig{};
  cfg.mixup_max_partners = 1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = AugmentConfig{};
  cfg.gain_db_min = 3.0;
  cfg.gain_db_max = -3.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
