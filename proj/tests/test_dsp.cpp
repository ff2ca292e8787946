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
#include <vector>

#include "protosound/dsp.hpp"
#include "protosound/rng.hpp"

using namespace protosound;

namespace {

constexpr double kPi = 3.14159265358979323846;

DspConfig small_config() {
  DspConfig cfg;
  cfg.sample_rate = 8000;
  cfg.fft_size = 512;
  cfg.hop = 128;
  cfg.mel_bins = 64;
  cfg.clip_seconds = 1.0;
  cfg.zscore_mean = -18.0;
  cfg.zscore_std = 6.0;
  return cfg;
}

Waveform tone(double freq, const DspConfig& cfg, double amplitude = 0.5) {
  Waveform w;
  w.sample_rate = cfg.sample_rate;
  w.samples.resize(cfg.clip_samples());
  for (std::size_t i = 0; i < w.samples.size(); ++i) {
    w.samples[i] =
        amplitude * std::sin(2.0 * kPi * freq * static_cast<double>(i) / cfg.sample_rate);
  }
  return w;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  REQUIRE(a.size() == b.size());
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double num = 0.0, da = 0.0, db = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - ma) * (b[i] - mb);
    da += (a[i] - ma) * (a[i] - ma);
    db += (b[i] - mb) * (b[i] - mb);
  }
  return num / std::sqrt(da * db);
}

}  // namespace

TEST_CASE("segment splits into zero-padded clips") {
  Waveform w;
  w.sample_rate = 32000;
  w.samples.assign(static_cast<std::size_t>(12 * 32000), 0.0);
  for (std::size_t i = 0; i < w.samples.size(); ++i) {
    w.samples[i] = static_cast<double>(i % 97) / 97.0;
  }
  const auto clips = segment(w, 5.0);
  REQUIRE(clips.size() == 3);
  for (const auto& clip : clips) {
    CHECK(clip.samples.size() == 160000);  // 5 s at 32 kHz
  }
  // First two clips reproduce the input exactly; the third is padded.
  for (int c = 0; c < 2; ++c) {
    for (std::size_t i = 0; i < 160000; i += 7919) {
      CHECK(clips[c].samples[i] == w.samples[c * 160000 + i]);
    }
  }
  for (std::size_t i = 2 * 160000; i < w.samples.size(); i += 4409) {
    CHECK(clips[2].samples[i - 2 * 160000] == w.samples[i]);
  }
  for (std::size_t i = w.samples.size() - 2 * 160000; i < 160000; i += 997) {
    CHECK(clips[2].samples[i] == 0.0);
  }
}

TEST_CASE("segment identity and error cases") {
  Waveform w;
  w.sample_rate = 32000;
  w.samples.assign(160000, 0.25);
  const auto clips = segment(w, 5.0);
  REQUIRE(clips.size() == 1);
  CHECK(clips[0].samples == w.samples);

  Waveform empty;
  empty.sample_rate = 32000;
  CHECK_THROWS_WITH_AS(segment(empty, 5.0), "empty input", std::invalid_argument);
}

TEST_CASE("segment concatenation property") {
  Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    Waveform w;
    w.sample_rate = 1000;
    const std::size_t n = 1 + rng.below(5000);
    w.samples.resize(n);
    for (double& s : w.samples) {
      s = rng.normal();
    }
    const auto clips = segment(w, 0.7);
    std::vector<double> rebuilt;
    for (const auto& clip : clips) {
      rebuilt.insert(rebuilt.end(), clip.samples.begin(), clip.samples.end());
    }
    rebuilt.resize(n);
    CHECK(rebuilt == w.samples);
  }
}

TEST_CASE("fft matches a naive dft") {
  Rng rng(5);
  std::vector<std::complex<double>> x(64);
  for (auto& v : x) {
    v = {rng.normal(), rng.normal()};
  }
  auto fftd = x;
  fft_inplace(fftd, false);
  for (std::size_t k = 0; k < x.size(); ++k) {
    std::complex<double> acc{0.0, 0.0};
    for (std::size_t n = 0; n < x.size(); ++n) {
      const double angle = -2.0 * kPi * static_cast<double>(k * n) / static_cast<double>(x.size());
      acc += x[n] * std::complex<double>(std::cos(angle), std::sin(angle));
    }
    CHECK(std::abs(fftd[k] - acc) < 1e-9);
  }
  // Inverse round trip.
  fft_inplace(fftd, true);
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK(std::abs(fftd[i] - x[i]) < 1e-12);
  }
}

TEST_CASE("logmel frame count and paper-default geometry") {
  DspConfig paper;  // defaults are the 32 kHz pipeline
  CHECK(paper.mel_bins == 256);
  CHECK(paper.stft_bins() == 1025);
  CHECK(paper.frames_for(160000) == 626);  // 1 + 160000/256

  const DspConfig cfg = small_config();
  const Spectrogram s = logmel(tone(440.0, cfg), cfg);
  CHECK(s.frames == 1 + 8000 / 128);
  CHECK(s.mel_bins == 64);
  CHECK_FALSE(s.standardized);
  REQUIRE(s.mel_edges.size() == static_cast<std::size_t>(cfg.mel_bins) + 2);
  for (std::size_t i = 1; i < s.mel_edges.size(); ++i) {
    CHECK(s.mel_edges[i] > s.mel_edges[i - 1]);
  }
}

TEST_CASE("frame-count formula holds for random clip lengths") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    DspConfig cfg = small_config();
    const int samples = 2000 + static_cast<int>(rng.below(30000));
    cfg.clip_seconds = static_cast<double>(samples) / cfg.sample_rate;
    if (cfg.clip_samples() != samples) continue;  // rounding guard
    Waveform w;
    w.sample_rate = cfg.sample_rate;
    w.samples.assign(samples, 0.0);
    for (double& v : w.samples) {
      v = rng.normal() * 0.1;
    }
    const Spectrogram s = logmel(w, cfg);
    CHECK(s.frames == 1 + samples / cfg.hop);
  }
}

TEST_CASE("all-zero waveform hits the log floor") {
  const DspConfig cfg = small_config();
  Waveform w;
  w.sample_rate = cfg.sample_rate;
  w.samples.assign(cfg.clip_samples(), 0.0);
  const Spectrogram s = logmel(w, cfg);
  for (double v : s.values) {
    CHECK(v == doctest::Approx(std::log(1e-10)));
  }
}

TEST_CASE("logmel rejects mismatched input") {
  const DspConfig cfg = small_config();
  Waveform w;
  w.sample_rate = cfg.sample_rate;
  w.samples.assign(123, 0.0);
  CHECK_THROWS_WITH_AS(logmel(w, cfg), "clip length", std::invalid_argument);
}

TEST_CASE("logmel is shift-covariant in the interior") {
  const DspConfig cfg = small_config();
  Rng rng(29);
  Waveform w;
  w.sample_rate = cfg.sample_rate;
  w.samples.resize(cfg.clip_samples());
  for (double& v : w.samples) {
    v = rng.normal() * 0.2;
  }
  const int shift_frames = 3;
  const int shift = shift_frames * cfg.hop;
  Waveform delayed;
  delayed.sample_rate = cfg.sample_rate;
  delayed.samples.assign(w.samples.size(), 0.0);
  for (std::size_t i = shift; i < w.samples.size(); ++i) {
    delayed.samples[i] = w.samples[i - shift];
  }
  const Spectrogram a = standardize(logmel(w, cfg), cfg);
  const Spectrogram b = standardize(logmel(delayed, cfg), cfg);
  // Interior columns: stay clear of both boundaries and the shifted-in zeros.
  double worst = 0.0;
  for (int t = shift_frames + 3; t < a.frames - shift_frames - 3; ++t) {
    for (int m = 0; m < a.mel_bins; ++m) {
      worst = std::max(worst, std::abs(b.at(m, t + shift_frames) - a.at(m, t)));
    }
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("standardize constants and round trip") {
  DspConfig cfg = small_config();
  cfg.zscore_mean = -13.369;
  cfg.zscore_std = 13.162;
  Spectrogram s;
  s.mel_bins = 1;
  s.frames = 2;
  s.values = {-13.369, -0.207};
  s.mel_edges = {0.0, 1.0, 2.0};
  const Spectrogram z = standardize(s, cfg);
  CHECK(z.at(0, 0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(z.at(0, 1) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(z.standardized);

  const Spectrogram back = unstandardize(z, cfg);
  CHECK(back.at(0, 0) == doctest::Approx(s.values[0]).epsilon(1e-6));
  CHECK(back.at(0, 1) == doctest::Approx(s.values[1]).epsilon(1e-6));

  CHECK_THROWS_WITH_AS(standardize(z, cfg), "double standardization", std::invalid_argument);
  CHECK_THROWS_AS(unstandardize(s, cfg), std::invalid_argument);
}

TEST_CASE("standardized values center at zero under recomputed constants") {
  DspConfig cfg = small_config();
  Rng rng(41);
  std::vector<Spectrogram> raws;
  double sum = 0.0, sum_sq = 0.0;
  std::size_t count = 0;
  for (int i = 0; i < 5; ++i) {
    Waveform w;
    w.sample_rate = cfg.sample_rate;
    w.samples.resize(cfg.clip_samples());
    for (double& v : w.samples) {
      v = 0.1 * rng.normal();
    }
    raws.push_back(logmel(w, cfg));
    for (double v : raws.back().values) {
      sum += v;
      sum_sq += v * v;
    }
    count += raws.back().values.size();
  }
  cfg.zscore_mean = sum / static_cast<double>(count);
  cfg.zscore_std =
      std::sqrt(sum_sq / static_cast<double>(count) - cfg.zscore_mean * cfg.zscore_mean);
  double standardized_sum = 0.0;
  for (const Spectrogram& raw : raws) {
    const Spectrogram z = standardize(raw, cfg);
    for (double v : z.values) {
      standardized_sum += v;
    }
  }
  CHECK(std::abs(standardized_sum / static_cast<double>(count)) < 1e-9);
}

TEST_CASE("griffin-lim reconstructs a tone") {
  const DspConfig cfg = small_config();
  // A quiet tone, typical of field-recording source levels; the log floor is
  // the pipeline's silence gate.
  const Waveform w = tone(1000.0, cfg, 0.002);
  const Spectrogram target = logmel(w, cfg);

  std::vector<double> errors;
  const Waveform rec = griffin_lim(target, cfg, 24, 7, &errors);
  CHECK(rec.samples.size() == static_cast<std::size_t>(target.frames) * cfg.hop);
  REQUIRE(errors.size() == 24);
  for (std::size_t i = 1; i < errors.size(); ++i) {
    CHECK(errors[i] <= errors[i - 1] + 1e-9);
  }

  Waveform trimmed = rec;
  trimmed.samples.resize(cfg.clip_samples());
  const Spectrogram round = logmel(trimmed, cfg);
  CHECK(pearson(round.values, target.values) >= 0.9);
}

TEST_CASE("griffin-lim is deterministic and validates input") {
  const DspConfig cfg = small_config();
  const Waveform w = tone(500.0, cfg);
  const Spectrogram target = logmel(w, cfg);
  const Waveform a = griffin_lim(target, cfg, 4, 99);
  const Waveform b = griffin_lim(target, cfg, 4, 99);
  CHECK(a.samples == b.samples);

  const Spectrogram z = standardize(target, cfg);
  CHECK_THROWS_WITH_AS(griffin_lim(z, cfg, 4, 0), "unstandardize first", std::invalid_argument);
}

TEST_CASE("all-floor spectrogram renders near silence") {
  const DspConfig cfg = small_config();
  Spectrogram floor;
  floor.mel_bins = cfg.mel_bins;
  floor.frames = 20;
  floor.values.assign(static_cast<std::size_t>(cfg.mel_bins) * 20, std::log(1e-10));
  floor.mel_edges.assign(cfg.mel_bins + 2, 0.0);
  for (std::size_t i = 0; i < floor.mel_edges.size(); ++i) {
    floor.mel_edges[i] = static_cast<double>(i);
  }
  const Waveform out = griffin_lim(floor, cfg, 4, 1);
  double rms = 0.0;
  for (double v : out.samples) {
    rms += v * v;
  }
  rms = std::sqrt(rms / static_cast<double>(out.samples.size()));
  CHECK(rms < 1e-3);
}
