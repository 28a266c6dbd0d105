#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dcq {

using Bytes = std::vector<std::uint8_t>;

/// Little-endian append-only encoder.
class ByteWriter {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u16(std::uint16_t v);
  void u32(std::uint32_t v);
  void f32(float v);
  void raw(std::span<const std::uint8_t> data) { bytes_.insert(bytes_.end(), data.begin(), data.end()); }
  void magic(std::string_view tag) { bytes_.insert(bytes_.end(), tag.begin(), tag.end()); }

  const Bytes& bytes() const { return bytes_; }
  Bytes take() { return std::move(bytes_); }

 private:
  Bytes bytes_;
};

/// Little-endian cursor over a byte buffer. Every failure is a DataError that
/// names the format and the byte offset.
class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> data, std::string format) : data_(data), format_(std::move(format)) {}

  std::uint8_t u8();
  std::uint16_t u16();
  std::uint32_t u32();
  float f32();
  std::span<const std::uint8_t> raw(std::size_t n);

  /// Consumes the four-byte tag or throws.
  void expect_magic(std::string_view tag);

  /// Throws unless exactly `n` bytes remain.
  void expect_remaining(std::size_t n, std::string_view what) const;
  void expect_end() const;

  std::size_t offset() const { return offset_; }
  std::size_t remaining() const { return data_.size() - offset_; }

  [[noreturn]] void fail(const std::string& message) const;

 private:
  void need(std::size_t n, std::string_view what);

  std::span<const std::uint8_t> data_;
  std::string format_;
  std::size_t offset_ = 0;
};

Bytes read_file(const std::filesystem::path& path);

/// Writes via a temporary sibling and renames over the target.
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> data);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace dcq
