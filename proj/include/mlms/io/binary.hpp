// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

namespace mlms::io {

/// Little-endian serialisation into a byte string, independent of host order.
class ByteWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u16(std::uint16_t v);
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void i16(std::int16_t v) { u16(static_cast<std::uint16_t>(v)); }
  void f32(float v);
  void f32s(std::span<const float> v);
  void bytes(std::string_view s) { buf_.append(s); }

  const std::string& data() const { return buf_; }
  std::string release() { return std::move(buf_); }

 private:
  std::string buf_;
};

/// Bounds-checked reader; every overrun throws DataError naming `context`.
class ByteReader {
 public:
  ByteReader(std::string_view data, std::string context)
      : data_(data), context_(std::move(context)) {}

  std::uint8_t u8();
  std::uint16_t u16();
  std::uint32_t u32();
  std::uint64_t u64();
  std::int16_t i16() { return static_cast<std::int16_t>(u16()); }
  float f32();
  void f32s(std::span<float> out);
  std::string_view bytes(std::size_t n);
  void skip(std::size_t n) { bytes(n); }

  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }
  const std::string& context() const { return context_; }

 private:
  void need(std::size_t n) const;

  std::string_view data_;
  std::string context_;
  std::size_t pos_ = 0;
};

/// Whole-file read; DataError with the path on failure.
std::string read_file(const std::filesystem::path& path);

/// Writes via a temporary sibling and rename, so readers never see a partial file.
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace mlms::io
