#pragma once

// WAV container I/O (16-bit PCM subset), resampling and framing.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ncae/error.hpp"

namespace ncae {

inline constexpr int kCanonicalSampleRate = 16000;

struct AudioClip {
  std::vector<double> samples;  // each in [-1, 1]
  int sample_rate = kCanonicalSampleRate;

  std::size_t size() const noexcept { return samples.size(); }
  double duration_seconds() const noexcept {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

struct FrameStream {
  std::vector<std::vector<double>> frames;
  std::size_t frame_len = 0;
  std::size_t hop = 0;
};

class WavError : public Error {
 public:
  enum class Kind { malformed_header, unsupported_encoding, truncated_data };

  WavError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

namespace detail {

inline std::uint32_t read_u32le(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) | (static_cast<std::uint32_t>(b[at + 1]) << 8) |
         (static_cast<std::uint32_t>(b[at + 2]) << 16) |
         (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

inline std::uint16_t read_u16le(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

inline bool tag_equals(std::span<const std::uint8_t> b, std::size_t at, std::string_view tag) {
  for (std::size_t i = 0; i < 4; ++i) {
    if (b[at + i] != static_cast<std::uint8_t>(tag[i])) return false;
  }
  return true;
}

inline void put_u32le(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline void put_u16le(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

inline void put_tag(std::vector<std::uint8_t>& out, std::string_view tag) {
  out.insert(out.end(), tag.begin(), tag.end());
}

}  // namespace detail

/// Decodes a RIFF/WAVE byte stream holding 16-bit signed PCM with one or two
/// channels. Stereo is downmixed by averaging; samples are scaled by 1/32768.
/// Throws WavError whose kind() separates header, encoding and truncation faults.
inline AudioClip parse_wav(std::span<const std::uint8_t> bytes) {
  using K = WavError::Kind;
  if (bytes.size() < 12) throw WavError(K::malformed_header, "wav: file shorter than RIFF header");
  if (!detail::tag_equals(bytes, 0, "RIFF"))
    throw WavError(K::malformed_header, "wav: missing RIFF magic");
  if (!detail::tag_equals(bytes, 8, "WAVE"))
    throw WavError(K::malformed_header, "wav: RIFF form type is not WAVE");

  bool have_fmt = false;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint32_t chunk_size = detail::read_u32le(bytes, pos + 4);
    const std::size_t body = pos + 8;
    if (detail::tag_equals(bytes, pos, "fmt ")) {
      if (chunk_size < 16 || body + 16 > bytes.size())
        throw WavError(K::malformed_header, "wav: fmt chunk too short");
      const std::uint16_t format = detail::read_u16le(bytes, body);
      channels = detail::read_u16le(bytes, body + 2);
      sample_rate = detail::read_u32le(bytes, body + 4);
      const std::uint16_t bits = detail::read_u16le(bytes, body + 14);
      if (format != 1)
        throw WavError(K::unsupported_encoding,
                       "wav: unsupported format code " + std::to_string(format) + " (need PCM=1)");
      if (bits != 16)
        throw WavError(K::unsupported_encoding,
                       "wav: unsupported bit depth " + std::to_string(bits) + " (need 16)");
      if (channels != 1 && channels != 2)
        throw WavError(K::unsupported_encoding,
                       "wav: unsupported channel count " + std::to_string(channels));
      if (sample_rate == 0) throw WavError(K::malformed_header, "wav: sample rate is zero");
      have_fmt = true;
    } else if (detail::tag_equals(bytes, pos, "data")) {
      if (!have_fmt) throw WavError(K::malformed_header, "wav: data chunk precedes fmt chunk");
      if (body + chunk_size > bytes.size())
        throw WavError(K::truncated_data, "wav: data chunk declares " + std::to_string(chunk_size) +
                                              " bytes but only " +
                                              std::to_string(bytes.size() - body) + " remain");
      const std::size_t block = 2u * channels;
      if (chunk_size % block != 0)
        throw WavError(K::truncated_data, "wav: data chunk ends mid-sample");
      const std::size_t n = chunk_size / block;
      AudioClip clip;
      clip.sample_rate = static_cast<int>(sample_rate);
      clip.samples.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t at = body + i * block;
        if (channels == 1) {
          clip.samples[i] = static_cast<std::int16_t>(detail::read_u16le(bytes, at)) / 32768.0;
        } else {
          const int l = static_cast<std::int16_t>(detail::read_u16le(bytes, at));
          const int r = static_cast<std::int16_t>(detail::read_u16le(bytes, at + 2));
          clip.samples[i] = (l + r) / 2.0 / 32768.0;
        }
      }
      return clip;
    }
    pos = body + chunk_size + (chunk_size & 1u);
  }
  if (!have_fmt) throw WavError(K::malformed_header, "wav: no fmt chunk");
  throw WavError(K::truncated_data, "wav: no data chunk");
}

/// Encodes a clip as 16-bit mono PCM. Samples are rounded to the nearest
/// multiple of 1/32768 and clamped to the int16 range.
inline std::vector<std::uint8_t> encode_wav(const AudioClip& clip) {
  const auto n = clip.samples.size();
  const auto data_bytes = static_cast<std::uint32_t>(n * 2);
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  detail::put_tag(out, "RIFF");
  detail::put_u32le(out, 36 + data_bytes);
  detail::put_tag(out, "WAVE");
  detail::put_tag(out, "fmt ");
  detail::put_u32le(out, 16);
  detail::put_u16le(out, 1);
  detail::put_u16le(out, 1);
  detail::put_u32le(out, static_cast<std::uint32_t>(clip.sample_rate));
  detail::put_u32le(out, static_cast<std::uint32_t>(clip.sample_rate) * 2);
  detail::put_u16le(out, 2);
  detail::put_u16le(out, 16);
  detail::put_tag(out, "data");
  detail::put_u32le(out, data_bytes);
  for (double s : clip.samples) {
    const double q = std::clamp(std::nearbyint(s * 32768.0), -32768.0, 32767.0);
    detail::put_u16le(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
  }
  return out;
}

inline AudioClip read_wav_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return parse_wav(bytes);
}

inline void write_wav_file(const std::string& path, const AudioClip& clip) {
  const auto bytes = encode_wav(clip);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to " + path);
}

/// Linear interpolation onto the target rate's uniform grid. Output length is
/// floor(len * target / source); positions past the last input sample hold it.
inline AudioClip resample_linear(const AudioClip& clip, int target_rate) {
  if (target_rate <= 0) throw InvalidArgument("resample: target rate must be positive");
  if (clip.samples.empty()) throw InvalidArgument("resample: empty clip");
  if (target_rate == clip.sample_rate) return clip;

  const auto n = clip.samples.size();
  const auto out_len = static_cast<std::size_t>(
      (static_cast<std::uint64_t>(n) * static_cast<std::uint64_t>(target_rate)) /
      static_cast<std::uint64_t>(clip.sample_rate));
  AudioClip out;
  out.sample_rate = target_rate;
  out.samples.resize(out_len);
  const double ratio = static_cast<double>(clip.sample_rate) / target_rate;
  for (std::size_t j = 0; j < out_len; ++j) {
    const double x = static_cast<double>(j) * ratio;
    const auto i = static_cast<std::size_t>(x);
    if (i + 1 >= n) {
      out.samples[j] = clip.samples[n - 1];
    } else {
      const double frac = x - static_cast<double>(i);
      out.samples[j] = clip.samples[i] + frac * (clip.samples[i + 1] - clip.samples[i]);
    }
  }
  return out;
}

inline std::size_t frame_count(std::size_t n, std::size_t frame_len, std::size_t hop) {
  if (frame_len == 0 || hop == 0 || frame_len > n) return 0;
  return 1 + (n - frame_len) / hop;
}

/// Splits a clip into frames at offsets 0, hop, 2*hop, ...; the trailing
/// partial frame is dropped.
inline FrameStream frame_signal(const AudioClip& clip, std::size_t frame_len, std::size_t hop) {
  if (frame_len == 0) throw InvalidArgument("frame_signal: frame_len must be positive");
  if (hop == 0 || hop > frame_len)
    throw InvalidArgument("frame_signal: hop must satisfy 0 < hop <= frame_len");
  if (frame_len > clip.samples.size())
    throw InvalidArgument("frame_signal: frame_len " + std::to_string(frame_len) +
                          " exceeds clip length " + std::to_string(clip.samples.size()));
  FrameStream fs;
  fs.frame_len = frame_len;
  fs.hop = hop;
  const auto count = frame_count(clip.samples.size(), frame_len, hop);
  fs.frames.reserve(count);
  for (std::size_t f = 0; f < count; ++f) {
    const auto first = clip.samples.begin() + static_cast<std::ptrdiff_t>(f * hop);
    fs.frames.emplace_back(first, first + static_cast<std::ptrdiff_t>(frame_len));
  }
  return fs;
}

}  // namespace ncae
