#pragma once

// Seeded synthetic road noise. "Dry" is pink-ish tire/road noise plus an engine
// harmonic stack; "wet" adds a high-frequency-tilted hiss and short spray
// bursts. No claim of physical fidelity: the knobs exist so tests can dial the
// difficulty of the dry-vs-wet task.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <string>
#include <vector>

#include "ncae/audio_io.hpp"
#include "ncae/error.hpp"
#include "ncae/mfcc.hpp"
#include "ncae/rng.hpp"

namespace ncae {

enum class RoadCondition { dry, wet };

inline const char* condition_name(RoadCondition c) { return c == RoadCondition::dry ? "dry" : "wet"; }

struct SynthConfig {
  double duration_seconds = 120.0;
  std::uint64_t seed = 0;
  int sample_rate = kCanonicalSampleRate;
  double wet_hiss_gain = 1.0;            // hiss RMS relative to the dry mix RMS
  double wet_tilt_db_per_octave = 3.0;   // hiss spectral tilt around 1 kHz
  double engine_f0 = 90.0;
  std::size_t harmonics = 8;
  double spray_bursts_per_second = 3.0;

  void validate() const {
    if (!(duration_seconds > 0.0)) throw InvalidArgument("synth: duration must be positive");
    if (sample_rate <= 0) throw InvalidArgument("synth: sample rate must be positive");
    if (!(engine_f0 > 0.0) || !(engine_f0 < sample_rate / 2.0))
      throw InvalidArgument("synth: engine_f0 must lie in (0, sample_rate/2)");
    if (!(wet_hiss_gain >= 0.0)) throw InvalidArgument("synth: wet_hiss_gain must be >= 0");
    if (!(spray_bursts_per_second >= 0.0))
      throw InvalidArgument("synth: spray burst rate must be >= 0");
  }
};

inline constexpr double kPeakLevel = 0.9;

namespace detail {

// First-order pole/zero section y[n] = x[n] - z x[n-1] + p y[n-1].
struct ShelfSection {
  double pole, zero, x1 = 0.0, y1 = 0.0;
  double operator()(double x) {
    const double y = x - zero * x1 + pole * y1;
    x1 = x;
    y1 = y;
    return y;
  }
};

// RBJ constant-peak-gain band-pass biquad.
struct BandPass {
  double b0, b2, a1, a2, x1 = 0, x2 = 0, y1 = 0, y2 = 0;
  BandPass(double center, double q, double rate) {
    const double w = 2.0 * std::numbers::pi * center / rate;
    const double alpha = std::sin(w) / (2.0 * q);
    const double a0 = 1.0 + alpha;
    b0 = alpha / a0;
    b2 = -alpha / a0;
    a1 = -2.0 * std::cos(w) / a0;
    a2 = (1.0 - alpha) / a0;
  }
  double operator()(double x) {
    const double y = b0 * x + b2 * x2 - a1 * y1 - a2 * y2;
    x2 = x1;
    x1 = x;
    y2 = y1;
    y1 = y;
    return y;
  }
};

inline double rms(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return v.empty() ? 0.0 : std::sqrt(acc / static_cast<double>(v.size()));
}

// White noise through a cascade of pole/zero shelves whose poles sit two
// octaves apart with a zero one octave above each pole: the response alternates
// between -6 and 0 dB/octave, averaging -3 dB/octave.
inline std::vector<double> pink_noise(std::size_t n, double rate, Rng& rng) {
  std::vector<ShelfSection> cascade;
  for (double f = 20.0; f < rate / 2.0; f *= 4.0) {
    const double pole = std::exp(-2.0 * std::numbers::pi * f / rate);
    const double zf = 2.0 * f;
    const double zero = zf < rate / 2.0 ? std::exp(-2.0 * std::numbers::pi * zf / rate) : 0.0;
    cascade.push_back({pole, zero});
  }
  std::vector<double> out(n);
  for (auto& s : out) {
    double x = standard_normal(rng);
    for (auto& sec : cascade) x = sec(x);
    s = x;
  }
  return out;
}

inline std::vector<double> engine_stack(std::size_t n, const SynthConfig& cfg, Rng& rng) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  std::vector<double> phases(cfg.harmonics);
  for (auto& p : phases) p = uniform(rng, 0.0, two_pi);
  const double am_rate = uniform(rng, 0.15, 0.4);
  const double am_phase = uniform(rng, 0.0, two_pi);
  const double nyquist = cfg.sample_rate / 2.0;
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / cfg.sample_rate;
    double acc = 0.0;
    for (std::size_t h = 1; h <= cfg.harmonics; ++h) {
      const double f = cfg.engine_f0 * static_cast<double>(h);
      if (f >= nyquist) break;
      acc += std::sin(two_pi * f * t + phases[h - 1]) / static_cast<double>(h);
    }
    out[i] = acc * (1.0 + 0.3 * std::sin(two_pi * am_rate * t + am_phase));
  }
  return out;
}

inline std::vector<double> tilted_hiss(std::size_t n, const SynthConfig& cfg, Rng& rng) {
  const double rate = cfg.sample_rate;
  std::vector<BandPass> bands;
  std::vector<double> gains;
  for (double fc = 250.0; fc < 0.45 * rate; fc *= 2.0) {
    bands.emplace_back(fc, std::numbers::sqrt2, rate);
    gains.push_back(std::pow(10.0, cfg.wet_tilt_db_per_octave * std::log2(fc / 1000.0) / 20.0));
  }
  std::vector<double> out(n);
  for (auto& s : out) {
    const double x = standard_normal(rng);
    double y = 0.0;
    for (std::size_t b = 0; b < bands.size(); ++b) y += gains[b] * bands[b](x);
    s = y;
  }
  return out;
}

// Short decaying bursts of differentiated (high-passed) white noise at Poisson times.
inline void add_spray_bursts(std::vector<double>& signal, const SynthConfig& cfg, double level, Rng& rng) {
  if (cfg.spray_bursts_per_second <= 0.0) return;
  const double rate = cfg.sample_rate;
  double t = 0.0;
  while (true) {
    t += -std::log(1.0 - uniform01(rng)) / cfg.spray_bursts_per_second;
    const auto start = static_cast<std::size_t>(t * rate);
    if (start >= signal.size()) break;
    const double length_s = uniform(rng, 0.02, 0.06);
    const double amp = level * uniform(rng, 0.5, 1.5);
    const auto len = static_cast<std::size_t>(length_s * rate);
    double prev = 0.0;
    for (std::size_t k = 0; k < len && start + k < signal.size(); ++k) {
      const double w = standard_normal(rng);
      const double env = std::exp(-4.0 * static_cast<double>(k) / static_cast<double>(len));
      signal[start + k] += amp * env * (w - prev) / std::numbers::sqrt2;
      prev = w;
    }
  }
}

}  // namespace detail

/// Generates one clip. Dry and wet draw from independent random streams derived
/// from config.seed, so they behave like two separate recordings.
inline AudioClip gen_road_noise(RoadCondition condition, const SynthConfig& config) {
  config.validate();
  const auto n = static_cast<std::size_t>(std::llround(config.duration_seconds * config.sample_rate));
  if (n == 0) throw InvalidArgument("synth: duration shorter than one sample");
  Rng base_rng(derive_seed(config.seed, condition == RoadCondition::dry ? 1 : 2));

  auto road = detail::pink_noise(n, config.sample_rate, base_rng);
  auto engine = detail::engine_stack(n, config, base_rng);
  const double road_rms = detail::rms(road);
  const double engine_rms = detail::rms(engine);
  std::vector<double> mix(n);
  for (std::size_t i = 0; i < n; ++i)
    mix[i] = 0.7 * road[i] / road_rms + 0.5 * engine[i] / engine_rms;

  if (condition == RoadCondition::wet) {
    Rng wet_rng(derive_seed(config.seed, 3));
    const double mix_rms = detail::rms(mix);
    auto hiss = detail::tilted_hiss(n, config, wet_rng);
    const double hiss_rms = detail::rms(hiss);
    if (hiss_rms > 0.0)
      for (std::size_t i = 0; i < n; ++i) mix[i] += config.wet_hiss_gain * mix_rms * hiss[i] / hiss_rms;
    detail::add_spray_bursts(mix, config, mix_rms, wet_rng);
  }

  double peak = 0.0;
  for (double s : mix) peak = std::max(peak, std::fabs(s));
  AudioClip clip;
  clip.sample_rate = config.sample_rate;
  clip.samples = std::move(mix);
  if (peak > 0.0)
    for (auto& s : clip.samples) s *= kPeakLevel / peak;
  return clip;
}

struct DatasetBundle {
  std::vector<Tensor2D> train_normal;
  std::vector<Tensor2D> test_normal;
  std::vector<Tensor2D> test_abnormal;
};

struct DatasetOptions {
  MfccConfig mfcc;
  double train_fraction = 0.75;
  std::size_t t_win = 32;
  std::size_t stride = 16;
};

/// Splits the dry clip time-contiguously at floor(N * train_fraction); each part
/// is featurized on its own so no frame or window straddles the cut. The wet clip
/// is test data in full.
inline DatasetBundle make_dataset_from_clips(const AudioClip& dry, const AudioClip& wet,
                                             const DatasetOptions& opt) {
  if (!(opt.train_fraction > 0.0 && opt.train_fraction < 1.0))
    throw InvalidArgument("make_dataset: train_fraction must lie in (0, 1)");
  const auto cut = static_cast<std::size_t>(std::floor(static_cast<double>(dry.samples.size()) *
                                                       opt.train_fraction));
  AudioClip train{{dry.samples.begin(), dry.samples.begin() + static_cast<std::ptrdiff_t>(cut)},
                  dry.sample_rate};
  AudioClip test{{dry.samples.begin() + static_cast<std::ptrdiff_t>(cut), dry.samples.end()},
                 dry.sample_rate};
  const std::size_t min_samples = opt.mfcc.frame_len + (opt.t_win - 1) * opt.mfcc.hop;
  for (const AudioClip* c : std::initializer_list<const AudioClip*>{&train, &test, &wet})
    if (c->samples.size() < min_samples)
      throw InvalidArgument("make_dataset: clip of " + std::to_string(c->samples.size()) +
                            " samples is too short for one " + std::to_string(opt.t_win) +
                            "-frame window");
  auto windows = [&](const AudioClip& c) {
    return window_sequences(extract_mfcc(c, opt.mfcc), opt.t_win, opt.stride);
  };
  return {windows(train), windows(test), windows(wet)};
}

inline DatasetBundle make_dataset(const SynthConfig& config, const DatasetOptions& opt) {
  return make_dataset_from_clips(gen_road_noise(RoadCondition::dry, config),
                                 gen_road_noise(RoadCondition::wet, config), opt);
}

}  // namespace ncae
