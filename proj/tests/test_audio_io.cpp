#include <gtest/gtest.h>

#include <cstdint>
#include <random>
#include <vector>

#include "ncae/audio_io.hpp"
#include "test_util.hpp"

using namespace ncae;

TEST(ParseWav, MonoSamplesScaledBy32768) {
  const auto clip = parse_wav(testutil::wav_bytes({0, 16384}, 1, 16000));
  EXPECT_EQ(clip.sample_rate, 16000);
  ASSERT_EQ(clip.samples.size(), 2u);
  EXPECT_EQ(clip.samples[0], 0.0);
  EXPECT_EQ(clip.samples[1], 0.5);
}

TEST(ParseWav, StereoIsChannelAverage) {
  const auto clip = parse_wav(testutil::wav_bytes({32767, -32768}, 2, 16000));
  ASSERT_EQ(clip.samples.size(), 1u);
  EXPECT_DOUBLE_EQ(clip.samples[0], (32767.0 - 32768.0) / 2.0 / 32768.0);
  EXPECT_NEAR(clip.samples[0], -0.0000153, 1e-7);
}

TEST(ParseWav, RejectsRifxMagic) {
  try {
    parse_wav(testutil::wav_bytes({1, 2}, 1, 16000, "RIFX"));
    FAIL() << "expected WavError";
  } catch (const WavError& e) {
    EXPECT_EQ(e.kind(), WavError::Kind::malformed_header);
  }
}

TEST(ParseWav, RejectsNonPcmAndOtherBitDepths) {
  try {
    parse_wav(testutil::wav_bytes({1, 2}, 1, 16000, "RIFF", 3));
    FAIL();
  } catch (const WavError& e) {
    EXPECT_EQ(e.kind(), WavError::Kind::unsupported_encoding);
  }
  try {
    parse_wav(testutil::wav_bytes({1, 2}, 1, 16000, "RIFF", 1, 24));
    FAIL();
  } catch (const WavError& e) {
    EXPECT_EQ(e.kind(), WavError::Kind::unsupported_encoding);
  }
}

TEST(ParseWav, TruncatedDataChunk) {
  auto bytes = testutil::wav_bytes({1, 2, 3, 4}, 1, 16000);
  bytes.resize(bytes.size() - 3);
  try {
    parse_wav(bytes);
    FAIL();
  } catch (const WavError& e) {
    EXPECT_EQ(e.kind(), WavError::Kind::truncated_data);
  }
  EXPECT_THROW(parse_wav(std::vector<std::uint8_t>(5, 0)), WavError);
}

TEST(ParseWav, SkipsUnknownChunks) {
  auto bytes = testutil::wav_bytes({100, -100}, 1, 8000);
  // Splice a 3-byte (odd, so padded) LIST chunk between fmt and data.
  const std::vector<std::uint8_t> extra{'L', 'I', 'S', 'T', 3, 0, 0, 0, 'a', 'b', 'c', 0};
  bytes.insert(bytes.begin() + 36, extra.begin(), extra.end());
  const auto clip = parse_wav(bytes);
  EXPECT_EQ(clip.sample_rate, 8000);
  ASSERT_EQ(clip.samples.size(), 2u);
  EXPECT_EQ(clip.samples[0], 100 / 32768.0);
}

TEST(EncodeWav, RoundTripIsBitExact) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> d(-32768, 32767);
  std::vector<std::int16_t> pcm(1000);
  for (auto& s : pcm) s = static_cast<std::int16_t>(d(rng));
  pcm[0] = -32768;
  pcm[1] = 32767;
  const auto original = testutil::wav_bytes(pcm, 1, 16000);
  EXPECT_EQ(encode_wav(parse_wav(original)), original);
}

TEST(EncodeWav, FileRoundTrip) {
  testutil::TempDir dir("audio_io");
  AudioClip clip{{0.0, 0.25, -0.5, 0.999}, 22050};
  write_wav_file(dir.file("a.wav"), clip);
  const auto back = read_wav_file(dir.file("a.wav"));
  EXPECT_EQ(back.sample_rate, 22050);
  ASSERT_EQ(back.samples.size(), 4u);
  EXPECT_EQ(back.samples[2], -0.5);
  EXPECT_THROW(read_wav_file(dir.file("missing.wav")), IoError);
}

TEST(Resample, IdentityAtSameRate) {
  AudioClip clip{{0.1, -0.2, 0.3}, 16000};
  const auto out = resample_linear(clip, 16000);
  EXPECT_EQ(out.samples, clip.samples);
}

TEST(Resample, LinearWithEdgeHold) {
  const auto out = resample_linear(AudioClip{{0.0, 1.0}, 2}, 4);
  EXPECT_EQ(out.samples, (std::vector<double>{0.0, 0.5, 1.0, 1.0}));
  EXPECT_EQ(out.sample_rate, 4);
}

TEST(Resample, LengthFormula) {
  AudioClip clip{std::vector<double>(48000, 0.0), 48000};
  EXPECT_EQ(resample_linear(clip, 16000).samples.size(), 16000u);
  clip.samples.resize(44100);
  clip.sample_rate = 44100;
  EXPECT_EQ(resample_linear(clip, 16000).samples.size(), 16000u);
}

TEST(FrameSignal, OffsetsAndCounts) {
  AudioClip clip;
  for (int i = 0; i < 10; ++i) clip.samples.push_back(i);
  const auto fs = frame_signal(clip, 4, 2);
  ASSERT_EQ(fs.frames.size(), 4u);
  for (std::size_t f = 0; f < 4; ++f) EXPECT_EQ(fs.frames[f][0], 2.0 * f);

  clip.samples.resize(4);
  EXPECT_EQ(frame_signal(clip, 4, 4).frames.size(), 1u);
  clip.samples.resize(3);
  EXPECT_THROW(frame_signal(clip, 4, 2), InvalidArgument);
}

TEST(FrameSignal, CountFormulaMatchesEnumeration) {
  for (std::size_t n = 1; n < 60; ++n)
    for (std::size_t len = 1; len <= n; ++len)
      for (std::size_t hop = 1; hop <= len; ++hop) {
        std::size_t count = 0;
        for (std::size_t off = 0; off + len <= n; off += hop) ++count;
        ASSERT_EQ(frame_count(n, len, hop), count) << n << ' ' << len << ' ' << hop;
      }
}
