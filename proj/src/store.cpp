#include "dcq/store.hpp"

#include <charconv>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <string>

#include "dcq/error.hpp"

namespace dcq {

namespace {

constexpr std::uint8_t kDatasetVersion = 1;
constexpr std::uint8_t kImageVersion = 1;
constexpr std::uint8_t kChannels = 3;

std::size_t packed_bytes(std::size_t count, int q) { return (count * static_cast<std::size_t>(q) + 7) / 8; }

}  // namespace

void QuantizedDataset::validate() const {
  if (q < 1 || q > 8) throw InvariantError("q = " + std::to_string(q) + " is outside [1, 8]");
  if (height < 1 || height > 0xFFFF || width < 1 || width > 0xFFFF) {
    throw InvariantError("image size " + std::to_string(height) + "x" + std::to_string(width) + " is not storable");
  }
  if (palettes.size() > 0xFFFF) throw InvariantError("too many clusters: " + std::to_string(palettes.size()));
  if (records.size() > std::numeric_limits<std::uint32_t>::max()) throw InvariantError("too many images");
  const std::size_t colors = std::size_t{1} << q;
  for (std::size_t c = 0; c < palettes.size(); ++c) {
    if (palettes[c].size() != colors) {
      throw InvariantError("palette " + std::to_string(c) + " has " + std::to_string(palettes[c].size()) +
                           " colors, expected " + std::to_string(colors));
    }
  }
  const auto pixels = static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const QuantizedRecord& r = records[i];
    if (r.cluster_id >= palettes.size()) {
      throw InvariantError("record " + std::to_string(i) + " refers to cluster " + std::to_string(r.cluster_id) +
                           " of " + std::to_string(palettes.size()));
    }
    if (r.indices.size() != pixels) {
      throw InvariantError("record " + std::to_string(i) + " has " + std::to_string(r.indices.size()) +
                           " indices, expected " + std::to_string(pixels));
    }
    for (std::uint8_t idx : r.indices) {
      if (idx >= colors) {
        throw InvariantError("record " + std::to_string(i) + " has palette index " + std::to_string(idx) +
                             " >= " + std::to_string(colors));
      }
    }
  }
}

std::size_t encoded_size(int q, std::size_t clusters, std::size_t images, int height, int width) {
  const std::size_t colors = std::size_t{1} << q;
  const auto pixels = static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
  return kDatasetHeaderBytes + 3 * clusters * colors + images * (4 + packed_bytes(pixels, q));
}

Bytes pack_indices(std::span<const std::uint8_t> indices, int q) {
  Bytes out(packed_bytes(indices.size(), q), 0);
  std::size_t bit = 0;
  for (std::uint8_t v : indices) {
    for (int b = q - 1; b >= 0; --b, ++bit) {
      if ((v >> b) & 1u) out[bit / 8] |= static_cast<std::uint8_t>(0x80u >> (bit % 8));
    }
  }
  return out;
}

std::vector<std::uint8_t> unpack_indices(std::span<const std::uint8_t> packed, std::size_t count, int q) {
  std::vector<std::uint8_t> out(count, 0);
  std::size_t bit = 0;
  for (std::size_t i = 0; i < count; ++i) {
    std::uint8_t v = 0;
    for (int b = 0; b < q; ++b, ++bit) v = static_cast<std::uint8_t>((v << 1) | ((packed[bit / 8] >> (7 - bit % 8)) & 1u));
    out[i] = v;
  }
  return out;
}

Bytes encode(const QuantizedDataset& ds) {
  ds.validate();
  ByteWriter w;
  w.magic("DCQD");
  w.u8(kDatasetVersion);
  w.u8(static_cast<std::uint8_t>(ds.q));
  w.u16(static_cast<std::uint16_t>(ds.num_clusters()));
  w.u32(static_cast<std::uint32_t>(ds.num_images()));
  w.u16(static_cast<std::uint16_t>(ds.height));
  w.u16(static_cast<std::uint16_t>(ds.width));
  w.u8(kChannels);
  for (const auto& palette : ds.palettes) {
    for (const RgbPixel& p : palette) {
      w.u8(p.r);
      w.u8(p.g);
      w.u8(p.b);
    }
  }
  for (const QuantizedRecord& r : ds.records) {
    w.u16(r.cluster_id);
    w.u16(r.label);
    w.raw(pack_indices(r.indices, ds.q));
  }
  return w.take();
}

QuantizedDataset decode(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, "DCQD");
  r.expect_magic("DCQD");
  const std::uint8_t version = r.u8();
  if (version != kDatasetVersion) r.fail("unsupported version " + std::to_string(version));
  QuantizedDataset ds;
  ds.q = r.u8();
  if (ds.q < 1 || ds.q > 8) r.fail("bit depth " + std::to_string(ds.q) + " outside [1, 8]");
  const std::uint16_t clusters = r.u16();
  const std::uint32_t images = r.u32();
  ds.height = r.u16();
  ds.width = r.u16();
  if (ds.height == 0 || ds.width == 0) r.fail("zero image dimension");
  const std::uint8_t channels = r.u8();
  if (channels != kChannels) r.fail("unsupported channel count " + std::to_string(channels));

  r.expect_remaining(encoded_size(ds.q, clusters, images, ds.height, ds.width) - kDatasetHeaderBytes,
                     "palettes and records");

  const std::size_t colors = std::size_t{1} << ds.q;
  ds.palettes.assign(clusters, std::vector<RgbPixel>(colors));
  for (auto& palette : ds.palettes) {
    for (RgbPixel& p : palette) {
      p.r = r.u8();
      p.g = r.u8();
      p.b = r.u8();
    }
  }
  const auto pixels = static_cast<std::size_t>(ds.height) * static_cast<std::size_t>(ds.width);
  const std::size_t nbytes = packed_bytes(pixels, ds.q);
  const std::size_t used_bits = pixels * static_cast<std::size_t>(ds.q);
  ds.records.resize(images);
  for (std::uint32_t i = 0; i < images; ++i) {
    QuantizedRecord& rec = ds.records[i];
    rec.cluster_id = r.u16();
    if (rec.cluster_id >= clusters) {
      r.fail("record " + std::to_string(i) + " cluster id " + std::to_string(rec.cluster_id) + " >= " +
             std::to_string(clusters));
    }
    rec.label = r.u16();
    const auto packed = r.raw(nbytes);
    if (used_bits % 8 != 0 && (packed.back() & (0xFFu >> (used_bits % 8))) != 0) {
      r.fail("record " + std::to_string(i) + " has non-zero padding bits");
    }
    rec.indices = unpack_indices(packed, pixels, ds.q);
  }
  r.expect_end();
  return ds;
}

void write_dataset(const std::filesystem::path& path, const QuantizedDataset& ds) { write_file(path, encode(ds)); }

QuantizedDataset load_dataset(const std::filesystem::path& path) { return decode(read_file(path)); }

RasterImage reconstruct(const QuantizedRecord& rec, const QuantizedDataset& ds) {
  if (rec.cluster_id >= ds.num_clusters()) throw InvariantError("record refers to a missing cluster palette");
  const auto& palette = ds.palettes[rec.cluster_id];
  if (rec.indices.size() != static_cast<std::size_t>(ds.height) * static_cast<std::size_t>(ds.width)) {
    throw InvariantError("record index count does not match the dataset image size");
  }
  std::vector<RgbPixel> pixels(rec.indices.size());
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    if (rec.indices[i] >= palette.size()) throw InvariantError("palette index out of range");
    pixels[i] = palette[rec.indices[i]];
  }
  return RasterImage(ds.height, ds.width, std::move(pixels));
}

CompressionRatio compression_ratio(int q) {
  if (q < 1 || q > 24) throw UsageError("compression ratio needs q in [1, 24], got " + std::to_string(q));
  std::int64_t num = 24 - q;
  std::int64_t den = 24;
  const std::int64_t g = std::gcd(num, den);
  if (g > 0) {
    num /= g;
    den /= g;
  } else {
    den = 1;
  }
  return {num, den};
}

std::size_t distinct_color_count(const QuantizedDataset& ds) {
  std::set<RgbPixel> colors;
  for (const auto& palette : ds.palettes) colors.insert(palette.begin(), palette.end());
  return colors.size();
}

Bytes encode_images(std::span<const RasterImage> images) {
  if (images.empty()) throw UsageError("DCQI: no images to write");
  const int h = images.front().height();
  const int w = images.front().width();
  if (h > 0xFFFF || w > 0xFFFF) throw UsageError("DCQI: images larger than 65535 pixels per side");
  ByteWriter out;
  out.magic("DCQI");
  out.u8(kImageVersion);
  out.u32(static_cast<std::uint32_t>(images.size()));
  out.u16(static_cast<std::uint16_t>(h));
  out.u16(static_cast<std::uint16_t>(w));
  out.u8(kChannels);
  for (const RasterImage& img : images) {
    if (img.height() != h || img.width() != w) throw UsageError("DCQI: images differ in size");
    for (const RgbPixel& p : img.pixels()) {
      out.u8(p.r);
      out.u8(p.g);
      out.u8(p.b);
    }
  }
  return out.take();
}

std::vector<RasterImage> decode_images(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, "DCQI");
  r.expect_magic("DCQI");
  const std::uint8_t version = r.u8();
  if (version != kImageVersion) r.fail("unsupported version " + std::to_string(version));
  const std::uint32_t n = r.u32();
  const std::uint16_t h = r.u16();
  const std::uint16_t w = r.u16();
  if (h == 0 || w == 0) r.fail("zero image dimension");
  const std::uint8_t channels = r.u8();
  if (channels != kChannels) r.fail("unsupported channel count " + std::to_string(channels));
  const std::size_t pixels = std::size_t{h} * w;
  r.expect_remaining(std::size_t{n} * pixels * 3, "pixel payload");
  std::vector<RasterImage> images;
  images.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    std::vector<RgbPixel> px(pixels);
    const auto raw = r.raw(pixels * 3);
    for (std::size_t j = 0; j < pixels; ++j) px[j] = {raw[3 * j], raw[3 * j + 1], raw[3 * j + 2]};
    images.emplace_back(h, w, std::move(px));
  }
  return images;
}

void write_images(const std::filesystem::path& path, std::span<const RasterImage> images) {
  write_file(path, encode_images(images));
}

std::vector<RasterImage> load_images(const std::filesystem::path& path) { return decode_images(read_file(path)); }

std::vector<std::uint16_t> load_labels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open label manifest " + path.string());
  std::vector<std::uint16_t> labels;
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    unsigned value = 0;
    const char* begin = line.data() + first;
    const char* end = line.data() + last + 1;
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end || value > 0xFFFF) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected a label in [0, 65535]");
    }
    labels.push_back(static_cast<std::uint16_t>(value));
  }
  return labels;
}

void write_labels(const std::filesystem::path& path, std::span<const std::uint16_t> labels) {
  std::ostringstream out;
  for (std::uint16_t l : labels) out << l << '\n';
  write_text_file(path, out.str());
}

}  // namespace dcq
