#pragma once

#include <unistd.h>

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "ncae/tensor.hpp"

namespace testutil {

// Hand-assembled WAV bytes, written independently of encode_wav.
inline std::vector<std::uint8_t> wav_bytes(const std::vector<std::int16_t>& interleaved, int channels,
                                           std::uint32_t rate, const char* magic = "RIFF",
                                           std::uint16_t format = 1, std::uint16_t bits = 16) {
  std::vector<std::uint8_t> b;
  auto tag = [&](const char* t) { b.insert(b.end(), t, t + 4); };
  auto u16 = [&](std::uint16_t v) {
    b.push_back(v & 0xff);
    b.push_back(v >> 8);
  };
  auto u32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) b.push_back((v >> (8 * i)) & 0xff);
  };
  const auto data_len = static_cast<std::uint32_t>(interleaved.size() * 2);
  tag(magic);
  u32(36 + data_len);
  tag("WAVE");
  tag("fmt ");
  u32(16);
  u16(format);
  u16(static_cast<std::uint16_t>(channels));
  u32(rate);
  u32(rate * channels * 2);
  u16(static_cast<std::uint16_t>(channels * 2));
  u16(bits);
  tag("data");
  u32(data_len);
  for (auto s : interleaved) u16(static_cast<std::uint16_t>(s));
  return b;
}

inline ncae::Tensor2D random_tensor(std::size_t rows, std::size_t cols, std::mt19937_64& rng,
                                    double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  ncae::Tensor2D t(rows, cols);
  for (auto& v : t.data()) v = n(rng);
  return t;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& name)
      : path_(std::filesystem::temp_directory_path() / ("ncae_test_" + name + "_" + std::to_string(::getpid()))) {
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace testutil
