#pragma once

#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qof/errors.hpp"

namespace qof {

using Bytes = std::vector<std::uint8_t>;

/// Canonical serialization: fields are concatenated in declared order,
/// integers are fixed-width big-endian, variable-length byte fields carry a
/// u32 length prefix. This layout is the wire and disk format for every
/// signed structure, so it must never change silently.
class ByteWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }

  void u32(std::uint32_t v) {
    buf_.push_back(static_cast<std::uint8_t>(v >> 24));
    buf_.push_back(static_cast<std::uint8_t>(v >> 16));
    buf_.push_back(static_cast<std::uint8_t>(v >> 8));
    buf_.push_back(static_cast<std::uint8_t>(v));
  }

  void u64(std::uint64_t v) {
    u32(static_cast<std::uint32_t>(v >> 32));
    u32(static_cast<std::uint32_t>(v));
  }

  /// Raw fixed-size field, no length prefix (digests, keys, signatures).
  void raw(std::span<const std::uint8_t> data) {
    buf_.insert(buf_.end(), data.begin(), data.end());
  }

  /// Variable-length field: u32 length prefix + contents.
  void bytes(std::span<const std::uint8_t> data) {
    u32(static_cast<std::uint32_t>(data.size()));
    raw(data);
  }

  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    buf_.insert(buf_.end(), s.begin(), s.end());
  }

  const Bytes& data() const { return buf_; }
  Bytes take() { return std::move(buf_); }

 private:
  Bytes buf_;
};

/// Strict reader over a canonical byte buffer. Truncated or trailing input
/// raises ParseError; protocol code treats that as a malformed message.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

  std::uint8_t u8() {
    need(1);
    return data_[pos_++];
  }

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = (std::uint32_t{data_[pos_]} << 24) |
                      (std::uint32_t{data_[pos_ + 1]} << 16) |
                      (std::uint32_t{data_[pos_ + 2]} << 8) |
                      std::uint32_t{data_[pos_ + 3]};
    pos_ += 4;
    return v;
  }

  std::uint64_t u64() {
    std::uint64_t hi = u32();
    return (hi << 32) | u32();
  }

  std::span<const std::uint8_t> raw(std::size_t len) {
    need(len);
    auto out = data_.subspan(pos_, len);
    pos_ += len;
    return out;
  }

  Bytes bytes() {
    std::uint32_t len = u32();
    auto s = raw(len);
    return Bytes(s.begin(), s.end());
  }

  std::string str() {
    std::uint32_t len = u32();
    auto s = raw(len);
    return std::string(s.begin(), s.end());
  }

  bool done() const { return pos_ == data_.size(); }
  std::size_t remaining() const { return data_.size() - pos_; }

  void expect_done() const {
    if (!done()) throw ParseError("trailing bytes after message");
  }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > data_.size()) throw ParseError("truncated message");
  }

  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

inline Bytes to_bytes(std::string_view s) {
  return Bytes(s.begin(), s.end());
}

std::string hex_encode(std::span<const std::uint8_t> data);
Bytes hex_decode(std::string_view hex);

}  // namespace qof
