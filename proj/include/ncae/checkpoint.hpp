#pragma once

// Binary model checkpoints. Layout (all integers little-endian), see
// docs/checkpoint_format.md:
//
//   "NCAE" | u32 version | u64 body_len | body | u32 crc32(everything before it)
//   body = u32 arch | u32 kernel | u32 hidden | u32 input_channels | u32 depth
//          | u32 tensor_count | tensor*
//   tensor = u32 name_len | name | u32 rank | u32 dim* | f64 value*

#include <zlib.h>

#include <bit>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include "ncae/error.hpp"
#include "ncae/models.hpp"

namespace ncae {

inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public Error {
 public:
  enum class Kind { bad_magic, version_mismatch, truncated, checksum, malformed };

  CheckpointError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

inline std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  crc = ::crc32(crc, bytes.data(), static_cast<uInt>(bytes.size()));
  return static_cast<std::uint32_t>(crc);
}

namespace detail {

class ByteWriter {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void raw(std::string_view s) { bytes.insert(bytes.end(), s.begin(), s.end()); }

  std::vector<std::uint8_t> bytes;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> b) : b_(b) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b_[pos_++]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b_[pos_++]) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(b_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::size_t position() const noexcept { return pos_; }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > b_.size())
      throw CheckpointError(CheckpointError::Kind::malformed, "checkpoint: body overruns its length");
  }

  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::vector<std::uint8_t> serialize_model(const Model& model) {
  detail::ByteWriter body;
  body.u32(static_cast<std::uint32_t>(model.architecture()));
  std::visit(
      [&](const auto& s) {
        if constexpr (std::is_same_v<std::decay_t<decltype(s)>, NcaeSpec>)
          body.u32(static_cast<std::uint32_t>(s.kernel_size));
        else
          body.u32(0);
        body.u32(static_cast<std::uint32_t>(s.hidden_width));
        body.u32(static_cast<std::uint32_t>(s.input_channels));
        body.u32(static_cast<std::uint32_t>(s.depth));
      },
      model.spec());
  const auto& ps = model.params().params();
  body.u32(static_cast<std::uint32_t>(ps.size()));
  for (const auto& p : ps) {
    body.u32(static_cast<std::uint32_t>(p.name.size()));
    body.raw(p.name);
    body.u32(static_cast<std::uint32_t>(p.shape.size()));
    for (auto d : p.shape) body.u32(static_cast<std::uint32_t>(d));
    for (double v : p.value) body.f64(v);
  }

  detail::ByteWriter out;
  out.raw("NCAE");
  out.u32(kCheckpointVersion);
  out.u64(body.bytes.size());
  out.bytes.insert(out.bytes.end(), body.bytes.begin(), body.bytes.end());
  out.u32(crc32_of(out.bytes));
  return out.bytes;
}

inline Model deserialize_model(std::span<const std::uint8_t> bytes) {
  using K = CheckpointError::Kind;
  if (bytes.size() < 4 || std::string_view(reinterpret_cast<const char*>(bytes.data()), 4) != "NCAE")
    throw CheckpointError(K::bad_magic, "checkpoint: wrong magic bytes (not an NCAE checkpoint)");
  if (bytes.size() < 16) throw CheckpointError(K::truncated, "checkpoint: truncated header");
  detail::ByteReader head(bytes.subspan(4, 12));
  const std::uint32_t version = head.u32();
  if (version != kCheckpointVersion)
    throw CheckpointError(K::version_mismatch, "checkpoint: format version " + std::to_string(version) +
                                                   ", this build reads " +
                                                   std::to_string(kCheckpointVersion));
  const std::uint64_t body_len = head.u64();
  if (body_len > bytes.size() || bytes.size() - 16 < body_len + 4)
    throw CheckpointError(K::truncated, "checkpoint: file truncated");
  const std::size_t crc_at = 16 + static_cast<std::size_t>(body_len);
  if (bytes.size() != crc_at + 4)
    throw CheckpointError(K::malformed, "checkpoint: trailing bytes after checksum");
  detail::ByteReader crc_reader(bytes.subspan(crc_at, 4));
  if (crc_reader.u32() != crc32_of(bytes.first(crc_at)))
    throw CheckpointError(K::checksum, "checkpoint: CRC32 mismatch (file corrupted)");

  detail::ByteReader r(bytes.subspan(16, static_cast<std::size_t>(body_len)));
  const std::uint32_t arch = r.u32();
  const std::size_t kernel = r.u32();
  const std::size_t hidden = r.u32();
  const std::size_t input = r.u32();
  const std::size_t depth = r.u32();
  ModelSpec spec;
  if (arch == static_cast<std::uint32_t>(Architecture::ncae)) {
    spec = NcaeSpec{kernel, hidden, input, depth};
  } else if (arch == static_cast<std::uint32_t>(Architecture::recurrent_baseline)) {
    spec = BaselineSpec{hidden, input, depth};
  } else {
    throw CheckpointError(K::malformed, "checkpoint: unknown architecture tag " + std::to_string(arch));
  }
  try {
    std::visit([](const auto& s) { s.validate(); }, spec);
  } catch (const InvalidArgument& e) {
    throw CheckpointError(K::malformed, std::string("checkpoint: invalid spec: ") + e.what());
  }

  ParamStore ps = declare_parameters(spec);
  const std::uint32_t count = r.u32();
  if (count != ps.params().size())
    throw CheckpointError(K::malformed, "checkpoint: tensor count does not match architecture");
  for (auto& p : ps.params()) {
    const std::string name = r.str(r.u32());
    if (name != p.name)
      throw CheckpointError(K::malformed, "checkpoint: expected tensor " + p.name + ", found " + name);
    const std::uint32_t rank = r.u32();
    std::vector<std::size_t> shape(rank);
    for (auto& d : shape) d = r.u32();
    if (shape != p.shape) throw CheckpointError(K::malformed, "checkpoint: shape mismatch for " + name);
    for (auto& v : p.value) v = r.f64();
  }
  if (r.position() != body_len)
    throw CheckpointError(K::malformed, "checkpoint: unread bytes in body");
  return Model(spec, std::move(ps));
}

inline void save_model(const Model& model, const std::string& path) {
  const auto bytes = serialize_model(model);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to " + path);
}

inline Model load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return deserialize_model(bytes);
}

}  // namespace ncae
