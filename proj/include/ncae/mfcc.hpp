#pragma once

// MFCC frontend: Hann window, radix-2 FFT power spectrum, mel filterbank,
// log compression and orthonormal DCT-II.

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "ncae/audio_io.hpp"
#include "ncae/error.hpp"
#include "ncae/tensor.hpp"

namespace ncae {

struct MfccConfig {
  std::size_t n_fft = 512;
  std::size_t n_mels = 40;
  std::size_t n_coeffs = 13;
  double fmin = 20.0;
  double fmax = 8000.0;
  std::size_t frame_len = 400;  // 25 ms at 16 kHz
  std::size_t hop = 160;        // 10 ms

  void validate(int sample_rate) const {
    if (n_fft == 0 || (n_fft & (n_fft - 1)) != 0)
      throw InvalidArgument("mfcc: n_fft must be a power of two");
    if (n_fft < frame_len) throw InvalidArgument("mfcc: n_fft must be >= frame_len");
    if (frame_len == 0 || hop == 0 || hop > frame_len)
      throw InvalidArgument("mfcc: need 0 < hop <= frame_len");
    if (n_mels == 0 || n_coeffs == 0 || n_coeffs > n_mels)
      throw InvalidArgument("mfcc: need 0 < n_coeffs <= n_mels");
    if (fmin < 0.0 || fmin >= fmax) throw InvalidArgument("mfcc: need 0 <= fmin < fmax");
    if (fmax > sample_rate / 2.0) throw InvalidArgument("mfcc: fmax exceeds Nyquist");
  }

  friend bool operator==(const MfccConfig&, const MfccConfig&) = default;
};

struct MfccSequence {
  Tensor2D frames;  // T x n_coeffs
  MfccConfig config;
};

enum class WindowKind { hann, rectangular };

inline constexpr double kLogFloor = 1e-10;

/// Symmetric Hann window: w[i] = 0.5 (1 - cos(2 pi i / (n - 1))).
inline std::vector<double> hann_window(std::size_t n) {
  if (n < 2) throw InvalidArgument("hann_window: n must be >= 2");
  std::vector<double> w(n);
  const double denom = static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / denom));
  // cos() is not exactly symmetric in floating point; mirror so w[i] == w[n-1-i].
  for (std::size_t i = 0; i < n / 2; ++i) w[n - 1 - i] = w[i];
  return w;
}

/// In-place iterative radix-2 Cooley-Tukey FFT. data.size() must be a power of two.
inline void fft_inplace(std::vector<std::complex<double>>& data) {
  const std::size_t n = data.size();
  if (n == 0 || (n & (n - 1)) != 0) throw InvalidArgument("fft: length must be a power of two");
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data[i], data[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double angle = -2.0 * std::numbers::pi / static_cast<double>(len);
    for (std::size_t k = 0; k < len / 2; ++k) {
      // Twiddles computed directly rather than by recurrence to keep error O(eps log n).
      const std::complex<double> w(std::cos(angle * static_cast<double>(k)),
                                   std::sin(angle * static_cast<double>(k)));
      for (std::size_t i = k; i < n; i += len) {
        const auto u = data[i];
        const auto v = data[i + len / 2] * w;
        data[i] = u + v;
        data[i + len / 2] = u - v;
      }
    }
  }
}

/// |FFT|^2 of the (windowed, zero-padded) frame; n_fft/2 + 1 bins.
inline std::vector<double> power_spectrum(std::span<const double> frame, std::size_t n_fft,
                                          WindowKind window = WindowKind::hann) {
  if (n_fft == 0 || (n_fft & (n_fft - 1)) != 0)
    throw InvalidArgument("power_spectrum: n_fft must be a power of two");
  if (frame.size() > n_fft) throw InvalidArgument("power_spectrum: frame longer than n_fft");
  std::vector<std::complex<double>> buf(n_fft);
  if (window == WindowKind::hann && frame.size() >= 2) {
    const auto w = hann_window(frame.size());
    for (std::size_t i = 0; i < frame.size(); ++i) buf[i] = frame[i] * w[i];
  } else {
    for (std::size_t i = 0; i < frame.size(); ++i) buf[i] = frame[i];
  }
  fft_inplace(buf);
  std::vector<double> out(n_fft / 2 + 1);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = std::norm(buf[k]);
  return out;
}

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

/// Center frequencies (Hz) of the n_mels triangular filters, uniformly spaced in mel.
inline std::vector<double> mel_centers_hz(const MfccConfig& config) {
  const double lo = hz_to_mel(config.fmin);
  const double hi = hz_to_mel(config.fmax);
  std::vector<double> centers(config.n_mels);
  for (std::size_t m = 0; m < config.n_mels; ++m)
    centers[m] = mel_to_hz(lo + (hi - lo) * static_cast<double>(m + 1) /
                                    static_cast<double>(config.n_mels + 1));
  return centers;
}

/// n_mels x (n_fft/2 + 1) triangular filterbank, row-major.
inline Tensor2D mel_filterbank(const MfccConfig& config, int sample_rate) {
  if (config.fmin >= config.fmax) throw InvalidArgument("mel_filterbank: fmin must be < fmax");
  config.validate(sample_rate);
  const std::size_t bins = config.n_fft / 2 + 1;
  const double lo = hz_to_mel(config.fmin);
  const double hi = hz_to_mel(config.fmax);
  std::vector<double> edges(config.n_mels + 2);
  for (std::size_t m = 0; m < edges.size(); ++m)
    edges[m] = mel_to_hz(lo + (hi - lo) * static_cast<double>(m) /
                                  static_cast<double>(config.n_mels + 1));

  Tensor2D fb(config.n_mels, bins);
  const double bin_hz = static_cast<double>(sample_rate) / static_cast<double>(config.n_fft);
  for (std::size_t m = 0; m < config.n_mels; ++m) {
    const double left = edges[m], center = edges[m + 1], right = edges[m + 2];
    for (std::size_t k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * bin_hz;
      double w = 0.0;
      if (f > left && f <= center) {
        w = (f - left) / (center - left);
      } else if (f > center && f < right) {
        w = (right - f) / (right - center);
      }
      fb(m, k) = w;
    }
    // A filter narrower than one bin would be all zero; give its nearest bin full weight.
    bool any = false;
    for (std::size_t k = 0; k < bins; ++k) any = any || fb(m, k) > 0.0;
    if (!any) {
      auto k = static_cast<std::size_t>(std::lround(center / bin_hz));
      fb(m, std::min(k, bins - 1)) = 1.0;
    }
  }
  return fb;
}

/// Orthonormal DCT-II, first n_out coefficients.
inline std::vector<double> dct_ii_orthonormal(std::span<const double> x, std::size_t n_out) {
  const std::size_t n = x.size();
  std::vector<double> out(n_out, 0.0);
  const double s0 = std::sqrt(1.0 / static_cast<double>(n));
  const double sk = std::sqrt(2.0 / static_cast<double>(n));
  for (std::size_t k = 0; k < n_out; ++k) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      acc += x[i] * std::cos(std::numbers::pi * static_cast<double>(k) *
                             (2.0 * static_cast<double>(i) + 1.0) / (2.0 * static_cast<double>(n)));
    out[k] = acc * (k == 0 ? s0 : sk);
  }
  return out;
}

/// Per-frame MFCC computation with the window, filterbank and DCT basis
/// precomputed. Used both for batch extraction and for streaming detection.
class MfccExtractor {
 public:
  MfccExtractor(const MfccConfig& config, int sample_rate)
      : config_(config), filterbank_(mel_filterbank(config, sample_rate)),
        window_(hann_window(config.frame_len)), dct_(config.n_coeffs, config.n_mels) {
    const double n = static_cast<double>(config.n_mels);
    for (std::size_t k = 0; k < config.n_coeffs; ++k) {
      const double scale = std::sqrt((k == 0 ? 1.0 : 2.0) / n);
      for (std::size_t i = 0; i < config.n_mels; ++i)
        dct_(k, i) = scale * std::cos(std::numbers::pi * static_cast<double>(k) *
                                      (2.0 * static_cast<double>(i) + 1.0) / (2.0 * n));
    }
  }

  const MfccConfig& config() const noexcept { return config_; }

  std::vector<double> compute(std::span<const double> frame) const {
    if (frame.size() != config_.frame_len)
      throw ShapeMismatch("mfcc: frame has " + std::to_string(frame.size()) +
                          " samples, expected " + std::to_string(config_.frame_len));
    std::vector<std::complex<double>> buf(config_.n_fft);
    for (std::size_t i = 0; i < frame.size(); ++i) buf[i] = frame[i] * window_[i];
    fft_inplace(buf);
    const std::size_t bins = config_.n_fft / 2 + 1;
    std::vector<double> log_mel(config_.n_mels);
    for (std::size_t m = 0; m < config_.n_mels; ++m) {
      double e = 0.0;
      for (std::size_t k = 0; k < bins; ++k) e += filterbank_(m, k) * std::norm(buf[k]);
      log_mel[m] = std::log(e + kLogFloor);
    }
    std::vector<double> out(config_.n_coeffs);
    for (std::size_t k = 0; k < config_.n_coeffs; ++k) {
      double acc = 0.0;
      for (std::size_t i = 0; i < config_.n_mels; ++i) acc += dct_(k, i) * log_mel[i];
      out[k] = acc;
    }
    return out;
  }

 private:
  MfccConfig config_;
  Tensor2D filterbank_;
  std::vector<double> window_;
  Tensor2D dct_;
};

/// Frames the clip and maps every frame to n_coeffs cepstral coefficients.
inline MfccSequence extract_mfcc(const AudioClip& clip, const MfccConfig& config) {
  config.validate(clip.sample_rate);
  if (clip.samples.size() < config.frame_len)
    throw InvalidArgument("extract_mfcc: clip of " + std::to_string(clip.samples.size()) +
                          " samples is shorter than one frame");
  const MfccExtractor extractor(config, clip.sample_rate);
  const std::size_t frames = frame_count(clip.samples.size(), config.frame_len, config.hop);
  MfccSequence seq{Tensor2D(frames, config.n_coeffs), config};
  const std::span<const double> all(clip.samples);
  for (std::size_t t = 0; t < frames; ++t) {
    const auto coeffs = extractor.compute(all.subspan(t * config.hop, config.frame_len));
    for (std::size_t c = 0; c < config.n_coeffs; ++c) seq.frames(t, c) = coeffs[c];
  }
  return seq;
}

/// Sliding T_win-frame windows along time; the trailing partial window is dropped.
inline std::vector<Tensor2D> window_sequences(const MfccSequence& seq, std::size_t t_win,
                                              std::size_t stride) {
  if (stride == 0) throw InvalidArgument("window_sequences: stride must be positive");
  if (t_win == 0) throw InvalidArgument("window_sequences: window length must be positive");
  const std::size_t total = seq.frames.rows();
  if (t_win > total)
    throw InvalidArgument("window_sequences: window of " + std::to_string(t_win) +
                          " frames exceeds sequence of " + std::to_string(total));
  std::vector<Tensor2D> out;
  const std::size_t count = 1 + (total - t_win) / stride;
  out.reserve(count);
  for (std::size_t w = 0; w < count; ++w) out.push_back(seq.frames.slice_rows(w * stride, t_win));
  return out;
}

/// Headerless CSV, one row per frame, 17 significant digits.
inline void write_mfcc_csv(const std::string& path, const MfccSequence& seq) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  char buf[32];
  for (std::size_t t = 0; t < seq.frames.rows(); ++t) {
    for (std::size_t c = 0; c < seq.frames.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", seq.frames(t, c));
      if (c) out << ',';
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace ncae
