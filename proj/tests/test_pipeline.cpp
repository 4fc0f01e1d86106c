#include <gtest/gtest.h>

#include <fstream>
#include <optional>
#include <random>
#include <sstream>

#include "ncae/pipeline.hpp"
#include "test_util.hpp"

using namespace ncae;

namespace {

// Frame source over a fixed list of frames.
struct ListSource {
  std::vector<std::vector<double>> frames;
  std::size_t next = 0;
  std::optional<std::vector<double>> operator()() {
    if (next >= frames.size()) return std::nullopt;
    return frames[next++];
  }
};

ListSource random_frames(std::size_t n, std::size_t c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  ListSource s;
  s.frames.assign(n, std::vector<double>(c));
  for (auto& f : s.frames)
    for (auto& v : f) v = d(rng);
  return s;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  return lines;
}

}  // namespace

TEST(Train, RejectsZeroEpochs) {
  TrainConfig cfg;
  cfg.epochs = 0;
  std::vector<Tensor2D> w{Tensor2D(8, 4)};
  EXPECT_THROW(train(build_ncae(NcaeSpec{3, 4, 4}, 1), w, cfg), InvalidArgument);
  cfg.epochs = 1;
  EXPECT_THROW(train(build_ncae(NcaeSpec{3, 4, 4}, 1), std::vector<Tensor2D>{}, cfg), InvalidArgument);
  EXPECT_THROW(train(build_ncae(NcaeSpec{3, 4, 4}, 1), std::vector<Tensor2D>{Tensor2D(8, 5)}, cfg),
               ShapeMismatch);
}

TEST(Train, ConstantWindowsAreLearned) {
  std::vector<Tensor2D> windows(8, Tensor2D(32, 13, 0.5));
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.learning_rate = 1e-3;
  const auto result = train(build_ncae(NcaeSpec{}, 3), windows, cfg);
  ASSERT_EQ(result.loss_history.size(), 200u);
  EXPECT_LT(result.loss_history.back(), 0.1 * result.loss_history.front());
}

TEST(Train, DeterministicUnderSeed) {
  std::mt19937_64 rng(4);
  std::vector<Tensor2D> windows;
  for (int i = 0; i < 10; ++i) windows.push_back(testutil::random_tensor(16, 4, rng));
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 3;
  cfg.seed = 17;
  for (const ModelSpec& spec : {ModelSpec(NcaeSpec{3, 8, 4}), ModelSpec(BaselineSpec{6, 4})}) {
    const auto a = train(build_model(spec, 5), windows, cfg);
    const auto b = train(build_model(spec, 5), windows, cfg);
    EXPECT_TRUE(a.model == b.model);
    EXPECT_EQ(a.loss_history, b.loss_history);
    EXPECT_FALSE(a.model == build_model(spec, 5));
  }
}

TEST(Train, DivergenceKeepsLastGoodState) {
  std::mt19937_64 rng(5);
  std::vector<Tensor2D> windows{testutil::random_tensor(8, 4, rng, 1e3)};
  TrainConfig cfg;
  cfg.learning_rate = 1e300;
  cfg.epochs = 50;
  try {
    train(build_ncae(NcaeSpec{3, 4, 4}, 1), windows, cfg);
    FAIL() << "expected divergence";
  } catch (const TrainingDiverged& e) {
    for (const auto& p : e.last_good().params().params())
      for (double v : p.value) EXPECT_TRUE(std::isfinite(v));
    for (double l : e.history()) EXPECT_TRUE(std::isfinite(l));
  }
}

TEST(AnomalyScore, Examples) {
  auto m = build_ncae(NcaeSpec{3, 4, 4}, 1);
  for (auto& p : m.params().params()) std::fill(p.value.begin(), p.value.end(), 0.0);
  Tensor2D w(3, 4);
  w(0, 0) = 3.0;
  w(2, 3) = 4.0;
  EXPECT_EQ(anomaly_score(m, w), 5.0);
  EXPECT_EQ(anomaly_score(m, Tensor2D(3, 4)), 0.0);
  EXPECT_THROW(anomaly_score(m, Tensor2D(3, 5)), ShapeMismatch);
}

TEST(Calibrate, Examples) {
  const std::vector<double> same(7, 0.02);
  const auto a = calibrate_threshold(same);
  EXPECT_EQ(a.mu, 0.02);
  EXPECT_EQ(a.sigma, 0.0);
  EXPECT_EQ(a.theta, 0.02);

  const auto b = calibrate_threshold(std::vector<double>{0.016, 0.024});
  EXPECT_NEAR(b.mu, 0.02, 1e-17);
  EXPECT_NEAR(b.sigma, 0.004, 1e-17);
  EXPECT_NEAR(b.theta, 0.026, 1e-16);

  const auto c = calibrate_threshold(std::vector<double>{1.0, 3.0});
  EXPECT_EQ(c.mu, 2.0);
  EXPECT_EQ(c.sigma, 1.0);
  EXPECT_EQ(c.theta, 3.5);

  EXPECT_THROW(calibrate_threshold(std::vector<double>{1.0}), InvalidArgument);
}

TEST(Calibrate, ShiftMovesThetaByShift) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> s(20);
    for (auto& v : s) v = u(rng);
    auto shifted = s;
    for (auto& v : shifted) v += 1.0;
    const auto a = calibrate_threshold(s), b = calibrate_threshold(shifted);
    EXPECT_NEAR(b.theta - a.theta, 1.0, 1e-12);
    EXPECT_NEAR(b.sigma, a.sigma, 1e-12);
  }
}

TEST(DetectStream, WarmUpAndCounts) {
  const auto m = build_ncae(NcaeSpec{3, 13, 13}, 1);
  const ThresholdCalibration calib{0.0, 0.0, 1e9};
  EXPECT_TRUE(detect_stream(m, calib, random_frames(31, 13, 1), 32).empty());
  const auto recs = detect_stream(m, calib, random_frames(40, 13, 1), 32, 1);
  ASSERT_EQ(recs.size(), 9u);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    EXPECT_EQ(recs[i].window_index, i);
    EXPECT_GE(recs[i].latency_seconds, 0.0);
    EXPECT_GE(recs[i].score, 0.0);
    EXPECT_FALSE(recs[i].anomalous);
  }
  EXPECT_EQ(detect_stream(m, calib, random_frames(40, 13, 1), 32, 4).size(), 3u);
  EXPECT_THROW(detect_stream(m, calib, random_frames(40, 12, 1), 32), ShapeMismatch);
}

TEST(DetectStream, ScoresMatchLastWindowAndBoundaryIsNormal) {
  const auto m = build_ncae(NcaeSpec{3, 13, 13}, 2);
  auto src = random_frames(33, 13, 3);
  Tensor2D last(32, 13);
  for (std::size_t t = 0; t < 32; ++t)
    for (std::size_t c = 0; c < 13; ++c) last(t, c) = src.frames[t + 1][c];
  const double s = anomaly_score(m, last);
  const auto recs = detect_stream(m, ThresholdCalibration{0.0, 0.0, s}, src, 32);
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_EQ(recs[1].score, s);
  EXPECT_FALSE(recs[1].anomalous);
  EXPECT_TRUE(ThresholdCalibration({0.0, 0.0, std::nextafter(s, 0.0)}).is_anomalous(s));
}

TEST(DetectStream, ReplayIsDeterministic) {
  const auto m = build_ncae(NcaeSpec{3, 13, 13}, 4);
  const ThresholdCalibration calib{0.0, 0.0, 20.0};
  const auto a = detect_stream(m, calib, random_frames(60, 13, 5), 32);
  const auto b = detect_stream(m, calib, random_frames(60, 13, 5), 32);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].score, b[i].score);
    EXPECT_EQ(a[i].anomalous, b[i].anomalous);
  }
}

TEST(DetectStream, ClipSourceMatchesBatchExtraction) {
  AudioClip clip{std::vector<double>(9000), 16000};
  std::mt19937_64 rng(7);
  std::normal_distribution<double> d(0.0, 0.1);
  for (auto& s : clip.samples) s = d(rng);
  const MfccConfig cfg;
  const auto batch = extract_mfcc(clip, cfg).frames;
  ClipFrameSource src(clip, cfg);
  for (std::size_t t = 0; t < batch.rows(); ++t) {
    const auto f = src();
    ASSERT_TRUE(f.has_value());
    for (std::size_t c = 0; c < 13; ++c) EXPECT_EQ((*f)[c], batch(t, c));
  }
  EXPECT_FALSE(src().has_value());
}

TEST(Exports, DetectionCsvAndSettings) {
  testutil::TempDir dir("pipeline");
  const std::vector<DetectionRecord> recs{{0, 1.5, false, 1e-4}, {1, 2.5, true, 2e-4}};
  write_detections_csv(dir.file("d.csv"), recs, 2.0);
  const auto lines = read_lines(dir.file("d.csv"));
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_EQ(lines[0], "window_index,score,theta,decision,latency_seconds");
  EXPECT_EQ(lines[1].substr(0, 14), "0,1.5,2,normal");
  EXPECT_EQ(lines[2].substr(0, 17), "1,2.5,2,anomalous");
  write_detections_csv(dir.file("e.csv"), {}, 2.0);
  EXPECT_EQ(read_lines(dir.file("e.csv")).size(), 1u);

  DetectorSettings s{{0.1, 0.2, 0.1 + 1.5 * 0.2}, MfccConfig{}, 24};
  s.mfcc.hop = 100;
  save_detector_settings(dir.file("cal.txt"), s);
  const auto back = load_detector_settings(dir.file("cal.txt"));
  EXPECT_EQ(back.calibration.theta, s.calibration.theta);
  EXPECT_EQ(back.calibration.mu, 0.1);
  EXPECT_EQ(back.t_win, 24u);
  EXPECT_EQ(back.mfcc, s.mfcc);
}
