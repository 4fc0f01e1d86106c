#pragma once

// Training loop, reconstruction scoring, threshold calibration and streaming
// detection.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <deque>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ncae/adam.hpp"
#include "ncae/error.hpp"
#include "ncae/mfcc.hpp"
#include "ncae/models.hpp"
#include "ncae/rng.hpp"

namespace ncae {

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t epochs = 30;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  std::size_t t_win = 32;
  std::size_t stride = 16;

  void validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
      throw InvalidArgument("train: learning_rate must be positive");
    if (epochs < 1) throw InvalidArgument("train: epochs must be >= 1");
    if (batch_size < 1) throw InvalidArgument("train: batch_size must be >= 1");
    if (t_win < 1 || stride < 1) throw InvalidArgument("train: t_win and stride must be >= 1");
  }
};

struct TrainResult {
  Model model;
  std::vector<double> loss_history;  // mean per-window loss of each epoch
};

/// Thrown when a loss or gradient turns non-finite. Carries the parameters
/// from before the failing update and the history up to that point.
class TrainingDiverged : public NonFiniteError {
 public:
  TrainingDiverged(const std::string& what, Model last_good, std::vector<double> history)
      : NonFiniteError(what), last_good_(std::move(last_good)), history_(std::move(history)) {}

  const Model& last_good() const noexcept { return last_good_; }
  const std::vector<double>& history() const noexcept { return history_; }

 private:
  Model last_good_;
  std::vector<double> history_;
};

/// Minimizes the mean over each minibatch of ||X - model(X)||_2 with Adam.
/// Window order is reshuffled every epoch from `config.seed`.
inline TrainResult train(Model model, std::span<const Tensor2D> windows, const TrainConfig& config) {
  config.validate();
  if (windows.empty()) throw InvalidArgument("train: no training windows");
  for (const auto& w : windows)
    if (!w.same_shape(windows.front()) || w.cols() != model.input_channels())
      throw ShapeMismatch("train: windows must share one shape matching the model");

  AdamState adam = AdamState::for_params(model.params(), config.learning_rate);
  Rng rng(config.seed);
  std::vector<std::size_t> order(windows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> history;
  history.reserve(config.epochs);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t first = 0; first < order.size(); first += config.batch_size) {
      const std::size_t last = std::min(first + config.batch_size, order.size());
      const double scale = 1.0 / static_cast<double>(last - first);
      const ParamStore before = model.params();
      model.params().zero_grad();
      for (std::size_t b = first; b < last; ++b) {
        const double loss = model.accumulate_gradients(windows[order[b]], scale);
        if (!std::isfinite(loss)) {
          model.params() = before;
          throw TrainingDiverged("train: non-finite loss in epoch " + std::to_string(epoch + 1),
                                 std::move(model), std::move(history));
        }
        epoch_loss += loss;
      }
      try {
        adam_step(model.params(), adam);
      } catch (const NonFiniteError& e) {
        model.params() = before;
        throw TrainingDiverged(e.what(), std::move(model), std::move(history));
      }
    }
    history.push_back(epoch_loss / static_cast<double>(windows.size()));
  }
  return {std::move(model), std::move(history)};
}

/// Reconstruction distance ||X - model(X)||_2 used as the anomaly score.
inline double anomaly_score(const Model& model, const Tensor2D& window) {
  if (window.cols() != model.input_channels())
    throw ShapeMismatch("anomaly_score: window has " + std::to_string(window.cols()) +
                        " channels, model expects " + std::to_string(model.input_channels()));
  return l2_distance(window, model.forward(window));
}

inline std::vector<double> score_windows(const Model& model, std::span<const Tensor2D> windows) {
  std::vector<double> scores;
  scores.reserve(windows.size());
  for (const auto& w : windows) scores.push_back(anomaly_score(model, w));
  return scores;
}

struct ThresholdCalibration {
  double mu = 0.0;
  double sigma = 0.0;  // population standard deviation
  double theta = 0.0;  // mu + 1.5 * sigma

  bool is_anomalous(double score) const noexcept { return score > theta; }
};

inline constexpr double kFenceMultiplier = 1.5;

/// mu = mean, sigma = population standard deviation, theta = mu + 1.5 sigma.
inline ThresholdCalibration calibrate_threshold(std::span<const double> scores) {
  if (scores.size() < 2) throw InvalidArgument("calibrate_threshold: need at least 2 scores");
  const double n = static_cast<double>(scores.size());
  double mu = std::accumulate(scores.begin(), scores.end(), 0.0) / n;
  // One refinement pass removes most of the rounding left in the naive mean
  // (it makes the mean of identical values exact).
  double correction = 0.0;
  for (double s : scores) correction += s - mu;
  mu += correction / n;
  double ss = 0.0;
  for (double s : scores) ss += (s - mu) * (s - mu);
  const double sigma = std::sqrt(ss / n);
  return {mu, sigma, mu + kFenceMultiplier * sigma};
}

struct DetectionRecord {
  std::size_t window_index = 0;
  double score = 0.0;
  bool anomalous = false;
  double latency_seconds = 0.0;
};

/// Consumes MFCC frames from `next_frame` (a callable returning
/// std::optional<std::vector<double>>, empty at end of stream). Once T_win
/// frames are buffered, every `stride`-th new frame triggers one decision on
/// the most recent T_win frames. Latency runs from the moment the frame is
/// handed over to the moment its record is emitted.
template <class FrameSource>
std::vector<DetectionRecord> detect_stream(const Model& model, const ThresholdCalibration& calib,
                                           FrameSource&& next_frame, std::size_t t_win,
                                           std::size_t stride = 1) {
  if (t_win == 0 || stride == 0) throw InvalidArgument("detect_stream: t_win and stride must be >= 1");
  using Clock = std::chrono::steady_clock;
  const std::size_t channels = model.input_channels();
  std::deque<std::vector<double>> buffer;
  std::vector<DetectionRecord> records;
  std::size_t seen = 0;
  Tensor2D window(t_win, channels);
  while (true) {
    std::optional<std::vector<double>> frame = next_frame();
    if (!frame) break;
    const auto available = Clock::now();
    if (frame->size() != channels)
      throw ShapeMismatch("detect_stream: frame has " + std::to_string(frame->size()) +
                          " coefficients, model expects " + std::to_string(channels));
    buffer.push_back(std::move(*frame));
    if (buffer.size() > t_win) buffer.pop_front();
    ++seen;
    if (seen < t_win || (seen - t_win) % stride != 0) continue;

    for (std::size_t t = 0; t < t_win; ++t)
      std::copy(buffer[t].begin(), buffer[t].end(), window.row(t).begin());
    DetectionRecord rec;
    rec.window_index = records.size();
    rec.score = anomaly_score(model, window);
    rec.anomalous = calib.is_anomalous(rec.score);
    rec.latency_seconds = std::chrono::duration<double>(Clock::now() - available).count();
    records.push_back(rec);
  }
  return records;
}

/// Frame source over the MFCC frames of an audio clip, computed lazily one
/// frame at a time as a live capture would deliver them.
class ClipFrameSource {
 public:
  ClipFrameSource(const AudioClip& clip, const MfccConfig& config)
      : clip_(clip), extractor_(config, clip.sample_rate),
        frames_(frame_count(clip.samples.size(), config.frame_len, config.hop)) {}

  std::optional<std::vector<double>> operator()() {
    if (next_ >= frames_) return std::nullopt;
    const auto& cfg = extractor_.config();
    const std::span<const double> all(clip_.samples);
    return extractor_.compute(all.subspan(next_++ * cfg.hop, cfg.frame_len));
  }

 private:
  const AudioClip& clip_;
  MfccExtractor extractor_;
  std::size_t frames_;
  std::size_t next_ = 0;
};

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_detections_csv(const std::string& path, std::span<const DetectionRecord> records,
                                 double theta) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "window_index,score,theta,decision,latency_seconds\n";
  for (const auto& r : records)
    out << r.window_index << ',' << format_double(r.score) << ',' << format_double(theta) << ','
        << (r.anomalous ? "anomalous" : "normal") << ',' << format_double(r.latency_seconds) << '\n';
  if (!out) throw IoError("write failed: " + path);
}

inline void write_loss_history_csv(const std::string& path, std::span<const double> history) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "epoch,mean_loss\n";
  for (std::size_t e = 0; e < history.size(); ++e)
    out << e + 1 << ',' << format_double(history[e]) << '\n';
  if (!out) throw IoError("write failed: " + path);
}

/// Everything `detect` needs besides the checkpoint: threshold plus the
/// feature settings the model was trained with.
struct DetectorSettings {
  ThresholdCalibration calibration;
  MfccConfig mfcc;
  std::size_t t_win = 32;
};

inline void save_detector_settings(const std::string& path, const DetectorSettings& s) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "mu=" << format_double(s.calibration.mu) << '\n'
      << "sigma=" << format_double(s.calibration.sigma) << '\n'
      << "theta=" << format_double(s.calibration.theta) << '\n'
      << "t_win=" << s.t_win << '\n'
      << "n_fft=" << s.mfcc.n_fft << '\n'
      << "n_mels=" << s.mfcc.n_mels << '\n'
      << "n_coeffs=" << s.mfcc.n_coeffs << '\n'
      << "fmin=" << format_double(s.mfcc.fmin) << '\n'
      << "fmax=" << format_double(s.mfcc.fmax) << '\n'
      << "frame_len=" << s.mfcc.frame_len << '\n'
      << "hop=" << s.mfcc.hop << '\n';
  if (!out) throw IoError("write failed: " + path);
}

inline DetectorSettings load_detector_settings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw IoError(path + ": malformed line '" + line + "'");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto get = [&](const char* key) -> const std::string& {
    const auto it = kv.find(key);
    if (it == kv.end()) throw IoError(path + ": missing key " + key);
    return it->second;
  };
  DetectorSettings s;
  s.calibration.mu = std::stod(get("mu"));
  s.calibration.sigma = std::stod(get("sigma"));
  s.calibration.theta = std::stod(get("theta"));
  s.t_win = std::stoul(get("t_win"));
  s.mfcc.n_fft = std::stoul(get("n_fft"));
  s.mfcc.n_mels = std::stoul(get("n_mels"));
  s.mfcc.n_coeffs = std::stoul(get("n_coeffs"));
  s.mfcc.fmin = std::stod(get("fmin"));
  s.mfcc.fmax = std::stod(get("fmax"));
  s.mfcc.frame_len = std::stoul(get("frame_len"));
  s.mfcc.hop = std::stoul(get("hop"));
  return s;
}

}  // namespace ncae
