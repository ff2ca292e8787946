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

#include "protosound/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "protosound/kernels.hpp"
#include "protosound/rng.hpp"

namespace protosound {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kLogFloor = 1e-10;

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

// Reflect indexing without edge duplication: ..., x[2], x[1], x[0], x[1], ...
std::size_t reflect_index(long i, long n) {
  if (n == 1) return 0;
  const long period = 2 * (n - 1);
  long j = i % period;
  if (j < 0) j += period;
  if (j >= n) j = period - j;
  return static_cast<std::size_t>(j);
}

std::vector<double> hann_periodic(int n) {
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * i / n);
  }
  return w;
}

// Centered STFT: frame t covers signal samples [t*hop - fft/2, t*hop + fft/2),
// out-of-range samples reflected. Returns frames x stft_bins.
std::vector<std::complex<double>> stft_frames(const double* x, std::size_t n,
                                              const DspConfig& cfg, int frames) {
  const int fft = cfg.fft_size;
  const int bins = cfg.stft_bins();
  const std::vector<double> window = hann_periodic(fft);
  std::vector<std::complex<double>> out(static_cast<std::size_t>(frames) * bins);
  std::vector<std::complex<double>> buf(fft);
  for (int t = 0; t < frames; ++t) {
    const long start = static_cast<long>(t) * cfg.hop - fft / 2;
    for (int i = 0; i < fft; ++i) {
      const double sample = x[reflect_index(start + i, static_cast<long>(n))];
      buf[i] = sample * window[i];
    }
    fft_inplace(buf, false);
    std::copy(buf.begin(), buf.begin() + bins,
              out.begin() + static_cast<std::size_t>(t) * bins);
  }
  return out;
}

// The phase-reconstruction loop works on the padded signal directly (frame t
// at offset t*hop of a signal of length (frames-1)*hop + fft). That keeps the
// analysis/synthesis pair an exact inverse with no per-iteration re-padding.
std::vector<std::complex<double>> stft_padded(const double* xp, std::size_t padded_len,
                                              const DspConfig& cfg, int frames) {
  const int fft = cfg.fft_size;
  const int bins = cfg.stft_bins();
  const std::vector<double> window = hann_periodic(fft);
  std::vector<std::complex<double>> out(static_cast<std::size_t>(frames) * bins);
  std::vector<std::complex<double>> buf(fft);
  for (int t = 0; t < frames; ++t) {
    const std::size_t start = static_cast<std::size_t>(t) * cfg.hop;
    for (int i = 0; i < fft; ++i) {
      const std::size_t pos = start + i;
      buf[i] = (pos < padded_len ? xp[pos] : 0.0) * window[i];
    }
    fft_inplace(buf, false);
    std::copy(buf.begin(), buf.begin() + bins,
              out.begin() + static_cast<std::size_t>(t) * bins);
  }
  return out;
}

// Window-weighted overlap-add inverse of stft_padded.
std::vector<double> istft_padded(const std::complex<double>* frames_data, int frames,
                                 const DspConfig& cfg, std::size_t padded_len) {
  const int fft = cfg.fft_size;
  const int bins = cfg.stft_bins();
  const std::vector<double> window = hann_periodic(fft);
  std::vector<double> acc(padded_len, 0.0);
  std::vector<double> norm(padded_len, 0.0);
  std::vector<std::complex<double>> buf(fft);
  for (int t = 0; t < frames; ++t) {
    const std::complex<double>* spec = frames_data + static_cast<std::size_t>(t) * bins;
    for (int k = 0; k < bins; ++k) {
      buf[k] = spec[k];
    }
    // Hermitian symmetry for a real signal.
    for (int k = bins; k < fft; ++k) {
      buf[k] = std::conj(spec[fft - k]);
    }
    fft_inplace(buf, true);
    const std::size_t start = static_cast<std::size_t>(t) * cfg.hop;
    for (int i = 0; i < fft; ++i) {
      const std::size_t pos = start + i;
      if (pos >= padded_len) continue;
      acc[pos] += buf[i].real() * window[i];
      norm[pos] += window[i] * window[i];
    }
  }
  for (std::size_t i = 0; i < padded_len; ++i) {
    acc[i] = norm[i] > 1e-12 ? acc[i] / norm[i] : 0.0;
  }
  return acc;
}

// Projected-gradient non-negative least squares: min ||F s - m||^2, s >= 0.
// step_scale is 1 / lambda_max(F^T F), estimated once per filterbank.
// Bins marked silent are pinned to zero: a mel row at the log floor certifies
// that every bin it covers with non-negligible weight carries no energy, and
// leaving those bins free lets the solver splatter power into them at zero
// objective cost.
void nnls_frame(const MelFilterbank& fb, const double* mel_power, int stft_bins,
                double step_scale, int inner_iterations, const unsigned char* silent,
                double* s) {
  const int mel_bins = static_cast<int>(fb.weights.size());
  std::vector<double> residual(mel_bins);
  std::vector<double> grad(stft_bins);
  // Transpose projection as the starting point.
  std::fill(s, s + stft_bins, 0.0);
  fb.apply_transposed(mel_power, s, stft_bins);
  for (int k = 0; k < stft_bins; ++k) {
    if (silent[k]) s[k] = 0.0;
  }
  for (int it = 0; it < inner_iterations; ++it) {
    fb.apply(s, residual.data());
    for (int m = 0; m < mel_bins; ++m) {
      residual[m] -= mel_power[m];
    }
    std::fill(grad.begin(), grad.end(), 0.0);
    fb.apply_transposed(residual.data(), grad.data(), stft_bins);
    for (int k = 0; k < stft_bins; ++k) {
      if (silent[k]) {
        s[k] = 0.0;
        continue;
      }
      s[k] -= step_scale * grad[k];
      if (s[k] < 0.0) s[k] = 0.0;
    }
  }
}

double power_iteration_lmax(const MelFilterbank& fb, int stft_bins) {
  std::vector<double> v(stft_bins, 1.0 / std::sqrt(static_cast<double>(stft_bins)));
  std::vector<double> mel(fb.weights.size());
  std::vector<double> w(stft_bins);
  double lambda = 1.0;
  for (int it = 0; it < 30; ++it) {
    fb.apply(v.data(), mel.data());
    std::fill(w.begin(), w.end(), 0.0);
    fb.apply_transposed(mel.data(), w.data(), stft_bins);
    lambda = std::sqrt(kernels::sum_squares(w.data(), w.size()));
    if (lambda <= 1e-30) return 1.0;
    kernels::scale_shift(w.data(), 1.0 / lambda, 0.0, v.data(), v.size());
  }
  return lambda;
}

}  // namespace

int DspConfig::clip_samples() const {
  return static_cast<int>(std::llround(clip_seconds * sample_rate));
}

int DspConfig::frames_for(std::size_t num_samples) const {
  return 1 + static_cast<int>(num_samples / static_cast<std::size_t>(hop));
}

void DspConfig::validate() const {
  if (sample_rate <= 0) throw std::invalid_argument("sample_rate must be positive");
  if (!is_power_of_two(fft_size)) throw std::invalid_argument("fft_size must be a power of two");
  if (hop <= 0 || hop > fft_size) throw std::invalid_argument("hop must be in (0, fft_size]");
  if (mel_bins <= 0) throw std::invalid_argument("mel_bins must be positive");
  if (clip_seconds <= 0.0) throw std::invalid_argument("clip_seconds must be positive");
  if (zscore_std <= 0.0) throw std::invalid_argument("zscore_std must be positive");
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

MelFilterbank MelFilterbank::build(int mel_bins, int fft_size, int sample_rate) {
  const int bins = fft_size / 2 + 1;
  const double mel_max = hz_to_mel(sample_rate / 2.0);
  MelFilterbank fb;
  fb.edges_hz.resize(mel_bins + 2);
  for (int i = 0; i < mel_bins + 2; ++i) {
    fb.edges_hz[i] = mel_to_hz(mel_max * i / (mel_bins + 1));
  }
  fb.first_bin.resize(mel_bins);
  fb.weights.resize(mel_bins);
  for (int m = 0; m < mel_bins; ++m) {
    const double lo = fb.edges_hz[m];
    const double center = fb.edges_hz[m + 1];
    const double hi = fb.edges_hz[m + 2];
    int first = -1;
    std::vector<double> w;
    for (int k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / fft_size;
      double value = 0.0;
      if (f > lo && f < hi) {
        value = f <= center ? (f - lo) / (center - lo) : (hi - f) / (hi - center);
      }
      if (value > 0.0) {
        if (first < 0) first = k;
        w.push_back(value);
      } else if (first >= 0 && f >= hi) {
        break;
      }
    }
    if (first < 0) {
      // Filter narrower than one bin; keep an explicit zero entry at the
      // nearest bin so dimensions stay consistent.
      first = std::min(bins - 1, static_cast<int>(center * fft_size / sample_rate));
      w.push_back(0.0);
    }
    fb.first_bin[m] = first;
    fb.weights[m] = std::move(w);
  }
  return fb;
}

void MelFilterbank::apply(const double* power, double* mel) const {
  for (std::size_t m = 0; m < weights.size(); ++m) {
    mel[m] = kernels::dot(weights[m].data(), power + first_bin[m], weights[m].size());
  }
}

void MelFilterbank::apply_transposed(const double* mel, double* power, int stft_bins) const {
  (void)stft_bins;
  for (std::size_t m = 0; m < weights.size(); ++m) {
    kernels::axpy(mel[m], weights[m].data(), power + first_bin[m], weights[m].size());
  }
}

void fft_inplace(std::vector<std::complex<double>>& x, bool inverse) {
  const std::size_t n = x.size();
  if (n == 0 || (n & (n - 1)) != 0) {
    throw std::invalid_argument("fft size must be a power of two");
  }
  // Bit-reversal permutation.
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) {
      j ^= bit;
    }
    j ^= bit;
    if (i < j) std::swap(x[i], x[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double angle = (inverse ? 2.0 : -2.0) * kPi / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(angle), std::sin(angle));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = x[i + k];
        const std::complex<double> v = x[i + k + len / 2] * w;
        x[i + k] = u + v;
        x[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
  if (inverse) {
    const double inv_n = 1.0 / static_cast<double>(n);
    for (auto& value : x) {
      value *= inv_n;
    }
  }
}

std::vector<Waveform> segment(const Waveform& w, double clip_seconds) {
  if (w.samples.empty()) throw std::invalid_argument("empty input");
  if (clip_seconds <= 0.0) throw std::invalid_argument("clip_seconds must be positive");
  const std::size_t clip_len =
      static_cast<std::size_t>(std::llround(clip_seconds * w.sample_rate));
  if (clip_len == 0) throw std::invalid_argument("clip shorter than one sample");
  const std::size_t n_clips = (w.samples.size() + clip_len - 1) / clip_len;
  std::vector<Waveform> clips;
  clips.reserve(n_clips);
  for (std::size_t c = 0; c < n_clips; ++c) {
    Waveform clip;
    clip.sample_rate = w.sample_rate;
    clip.samples.assign(clip_len, 0.0);
    const std::size_t begin = c * clip_len;
    const std::size_t end = std::min(begin + clip_len, w.samples.size());
    std::copy(w.samples.begin() + begin, w.samples.begin() + end, clip.samples.begin());
    clips.push_back(std::move(clip));
  }
  return clips;
}

Spectrogram logmel(const Waveform& w, const DspConfig& cfg) {
  cfg.validate();
  if (w.sample_rate != cfg.sample_rate) {
    throw std::invalid_argument("sample rate mismatch");
  }
  if (static_cast<int>(w.samples.size()) != cfg.clip_samples()) {
    throw std::invalid_argument("clip length");
  }
  for (double v : w.samples) {
    if (!std::isfinite(v)) throw std::invalid_argument("waveform not finite");
  }
  const int frames = cfg.frames_for(w.samples.size());
  const int bins = cfg.stft_bins();
  const MelFilterbank fb = MelFilterbank::build(cfg.mel_bins, cfg.fft_size, cfg.sample_rate);
  const auto spec = stft_frames(w.samples.data(), w.samples.size(), cfg, frames);

  Spectrogram out;
  out.mel_bins = cfg.mel_bins;
  out.frames = frames;
  out.standardized = false;
  out.frame_hop_seconds = static_cast<double>(cfg.hop) / cfg.sample_rate;
  out.mel_edges = fb.edges_hz;
  out.values.resize(static_cast<std::size_t>(cfg.mel_bins) * frames);

  std::vector<double> power(bins);
  std::vector<double> mel(cfg.mel_bins);
  for (int t = 0; t < frames; ++t) {
    const std::complex<double>* frame = spec.data() + static_cast<std::size_t>(t) * bins;
    for (int k = 0; k < bins; ++k) {
      power[k] = std::norm(frame[k]);
    }
    fb.apply(power.data(), mel.data());
    for (int m = 0; m < cfg.mel_bins; ++m) {
      out.at(m, t) = std::log(std::max(mel[m], kLogFloor));
    }
  }
  return out;
}

Spectrogram standardize(const Spectrogram& s, const DspConfig& cfg) {
  if (s.standardized) throw std::invalid_argument("double standardization");
  if (cfg.zscore_std <= 0.0) throw std::invalid_argument("zscore_std must be positive");
  Spectrogram out = s;
  kernels::scale_shift(s.values.data(), 1.0 / cfg.zscore_std,
                       -cfg.zscore_mean / cfg.zscore_std, out.values.data(),
                       out.values.size());
  out.standardized = true;
  return out;
}

Spectrogram unstandardize(const Spectrogram& s, const DspConfig& cfg) {
  if (!s.standardized) throw std::invalid_argument("input is not standardized");
  Spectrogram out = s;
  kernels::scale_shift(s.values.data(), cfg.zscore_std, cfg.zscore_mean,
                       out.values.data(), out.values.size());
  out.standardized = false;
  return out;
}

Waveform griffin_lim(const Spectrogram& s, const DspConfig& cfg, int iterations,
                     std::uint64_t seed, std::vector<double>* spectral_errors) {
  cfg.validate();
  if (s.standardized) throw std::invalid_argument("unstandardize first");
  if (iterations < 1) throw std::invalid_argument("iterations must be >= 1");
  if (s.mel_bins != cfg.mel_bins) throw std::invalid_argument("mel_bins mismatch");

  const int frames = s.frames;
  const int bins = cfg.stft_bins();
  const MelFilterbank fb = MelFilterbank::build(cfg.mel_bins, cfg.fft_size, cfg.sample_rate);
  const double lmax = power_iteration_lmax(fb, bins);
  const double step = 1.0 / std::max(lmax, 1e-12);

  // Mel power -> linear-frequency magnitudes (per frame NNLS, 50 iterations).
  const double log_floor_edge = std::log(kLogFloor) + 1e-9;
  std::vector<double> mags(static_cast<std::size_t>(frames) * bins);
  std::vector<double> mel_power(cfg.mel_bins);
  std::vector<double> linear_power(bins);
  std::vector<unsigned char> silent(bins);
  for (int t = 0; t < frames; ++t) {
    std::fill(silent.begin(), silent.end(), 0);
    for (int m = 0; m < cfg.mel_bins; ++m) {
      mel_power[m] = std::exp(s.at(m, t));
      if (s.at(m, t) <= log_floor_edge) {
        for (std::size_t k = 0; k < fb.weights[m].size(); ++k) {
          if (fb.weights[m][k] >= 1e-3) silent[fb.first_bin[m] + k] = 1;
        }
      }
    }
    nnls_frame(fb, mel_power.data(), bins, step, 300, silent.data(), linear_power.data());
    for (int k = 0; k < bins; ++k) {
      mags[static_cast<std::size_t>(t) * bins + k] = std::sqrt(linear_power[k]);
    }
  }

  // Iterative phase reconstruction, with the momentum acceleration of the
  // fast Griffin-Lim variant (0.9 keeps the per-iteration magnitude error
  // non-increasing in practice, unlike 0.99). Initial phases are random
  // per-bin offsets advanced at each bin's center frequency across frames;
  // iid phases leave stationary content far from consistency and converge
  // an order of magnitude slower.
  constexpr double kMomentum = 0.9;
  Rng rng(seed);
  std::vector<double> bin_offset(bins);
  for (double& phi : bin_offset) {
    phi = rng.uniform(0.0, 2.0 * kPi);
  }
  std::vector<std::complex<double>> spec(static_cast<std::size_t>(frames) * bins);
  std::vector<std::complex<double>> prev(spec.size(), {0.0, 0.0});
  for (int t = 0; t < frames; ++t) {
    for (int k = 0; k < bins; ++k) {
      const double advance = 2.0 * kPi * static_cast<double>(k) * cfg.hop *
                             static_cast<double>(t) / cfg.fft_size;
      spec[static_cast<std::size_t>(t) * bins + k] =
          std::polar(mags[static_cast<std::size_t>(t) * bins + k], bin_offset[k] + advance);
    }
  }
  const std::size_t padded_len =
      static_cast<std::size_t>(frames - 1) * cfg.hop + cfg.fft_size;
  if (spectral_errors) spectral_errors->clear();

  auto magnitude_error = [&mags](const std::vector<std::complex<double>>& projected) {
    double err = 0.0;
    for (std::size_t i = 0; i < projected.size(); ++i) {
      const double mag = std::abs(projected[i]);
      err += (mag - mags[i]) * (mag - mags[i]);
    }
    return std::sqrt(err);
  };
  auto constrain = [&mags](const std::vector<std::complex<double>>& reference,
                           const std::vector<std::complex<double>>& momentum_prev,
                           double momentum, std::vector<std::complex<double>>& out) {
    for (std::size_t i = 0; i < out.size(); ++i) {
      const std::complex<double> direction =
          reference[i] - (momentum / (1.0 + momentum)) * momentum_prev[i];
      const double dir_mag = std::abs(direction);
      out[i] = dir_mag > 1e-300 ? mags[i] * direction / dir_mag
                                : std::complex<double>(mags[i], 0.0);
    }
  };

  // Accelerated iteration with a monotone guard: if a momentum step raised
  // the magnitude error, redo it as a plain step from the best analysis so
  // far (plain alternating projection cannot increase the error) and restart
  // the momentum buffer.
  std::vector<std::complex<double>> best_projected;
  double best_err = std::numeric_limits<double>::infinity();
  std::vector<double> x;
  for (int it = 0; it < iterations; ++it) {
    x = istft_padded(spec.data(), frames, cfg, padded_len);
    auto projected = stft_padded(x.data(), x.size(), cfg, frames);
    double err = magnitude_error(projected);
    if (err > best_err) {
      std::fill(prev.begin(), prev.end(), std::complex<double>(0.0, 0.0));
      constrain(best_projected, prev, 0.0, spec);
      x = istft_padded(spec.data(), frames, cfg, padded_len);
      projected = stft_padded(x.data(), x.size(), cfg, frames);
      err = magnitude_error(projected);
    }
    if (spectral_errors) spectral_errors->push_back(err);
    if (err <= best_err) {
      best_err = err;
      best_projected = projected;
    }
    constrain(projected, prev, kMomentum, spec);
    prev = std::move(projected);
  }
  x = istft_padded(spec.data(), frames, cfg, padded_len);

  // Drop the centering pad; output length is frames * hop.
  Waveform out;
  out.sample_rate = cfg.sample_rate;
  const std::size_t offset = static_cast<std::size_t>(cfg.fft_size) / 2;
  out.samples.assign(static_cast<std::size_t>(frames) * cfg.hop, 0.0);
  for (std::size_t i = 0; i < out.samples.size() && offset + i < x.size(); ++i) {
    out.samples[i] = x[offset + i];
  }
  return out;
}

}  // namespace protosound
