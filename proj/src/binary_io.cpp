#include "dcq/binary_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <system_error>

#include "dcq/error.hpp"

namespace dcq {

void ByteWriter::u16(std::uint16_t v) {
  bytes_.push_back(static_cast<std::uint8_t>(v & 0xFF));
  bytes_.push_back(static_cast<std::uint8_t>(v >> 8));
}

void ByteWriter::u32(std::uint32_t v) {
  for (int s = 0; s < 32; s += 8) bytes_.push_back(static_cast<std::uint8_t>((v >> s) & 0xFF));
}

void ByteWriter::f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

void ByteReader::fail(const std::string& message) const {
  throw DataError(format_ + ": " + message + " (at byte offset " + std::to_string(offset_) + ")");
}

void ByteReader::need(std::size_t n, std::string_view what) {
  if (remaining() < n) {
    fail("truncated " + std::string(what) + ": expected " + std::to_string(n) + " more bytes, found " +
         std::to_string(remaining()));
  }
}

std::uint8_t ByteReader::u8() {
  need(1, "u8");
  return data_[offset_++];
}

std::uint16_t ByteReader::u16() {
  need(2, "u16");
  const auto v = static_cast<std::uint16_t>(data_[offset_] | (data_[offset_ + 1] << 8));
  offset_ += 2;
  return v;
}

std::uint32_t ByteReader::u32() {
  need(4, "u32");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data_[offset_ + i]) << (8 * i);
  offset_ += 4;
  return v;
}

float ByteReader::f32() { return std::bit_cast<float>(u32()); }

std::span<const std::uint8_t> ByteReader::raw(std::size_t n) {
  need(n, "block");
  auto out = data_.subspan(offset_, n);
  offset_ += n;
  return out;
}

void ByteReader::expect_magic(std::string_view tag) {
  if (remaining() < tag.size() || std::memcmp(data_.data() + offset_, tag.data(), tag.size()) != 0) {
    fail("bad magic, expected \"" + std::string(tag) + "\"");
  }
  offset_ += tag.size();
}

void ByteReader::expect_remaining(std::size_t n, std::string_view what) const {
  if (remaining() < n) {
    fail("truncated " + std::string(what) + ": expected " + std::to_string(n) + " bytes, found " +
         std::to_string(remaining()) + " (file should be " + std::to_string(offset_ + n) + " bytes, is " +
         std::to_string(data_.size()) + ")");
  }
  if (remaining() > n) {
    fail(std::to_string(remaining() - n) + " trailing bytes after " + std::string(what));
  }
}

void ByteReader::expect_end() const {
  if (remaining() != 0) fail(std::to_string(remaining()) + " trailing bytes");
}

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw DataError("read error on " + path.string());
  return data;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> data) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open " + tmp.string() + " for writing");
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (!out) {
      out.close();
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw DataError("write error on " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw DataError("cannot move output into place at " + path.string());
  }
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace dcq
