#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "dcq/binary_io.hpp"
#include "dcq/color.hpp"

namespace dcq {

inline constexpr std::uint16_t kNoLabel = 0xFFFF;
inline constexpr std::size_t kDatasetHeaderBytes = 17;

/// One stored image: its cluster, label and per-pixel palette codes.
struct QuantizedRecord {
  std::uint16_t cluster_id = 0;
  std::uint16_t label = kNoLabel;
  std::vector<std::uint8_t> indices;

  friend bool operator==(const QuantizedRecord&, const QuantizedRecord&) = default;
};

/// Indexed-color dataset: shared sRGB palettes plus one record per image.
struct QuantizedDataset {
  int q = 1;
  int height = 1;
  int width = 1;
  /// palettes[c] holds 2^q colors.
  std::vector<std::vector<RgbPixel>> palettes;
  std::vector<QuantizedRecord> records;

  std::size_t num_clusters() const { return palettes.size(); }
  std::size_t num_images() const { return records.size(); }

  /// Throws InvariantError describing the first violated invariant.
  void validate() const;

  friend bool operator==(const QuantizedDataset&, const QuantizedDataset&) = default;
};

/// Exact DCQD size: 17 header bytes, 3 bytes per palette color and
/// 4 + ceil(H*W*q/8) bytes per record.
std::size_t encoded_size(int q, std::size_t clusters, std::size_t images, int height, int width);

/// Packs q-bit codes MSB-first, zero-padded to a whole byte.
Bytes pack_indices(std::span<const std::uint8_t> indices, int q);
std::vector<std::uint8_t> unpack_indices(std::span<const std::uint8_t> packed, std::size_t count, int q);

// DCQD: "DCQD", u8 version = 1, u8 q, u16 clusters, u32 images, u16 H, u16 W,
// u8 channels = 3; palettes as sRGB triples; per image u16 cluster, u16 label,
// packed codes.
Bytes encode(const QuantizedDataset& ds);
QuantizedDataset decode(std::span<const std::uint8_t> bytes);

void write_dataset(const std::filesystem::path& path, const QuantizedDataset& ds);
QuantizedDataset load_dataset(const std::filesystem::path& path);

/// Image of record `rec` rendered with its cluster's stored palette.
RasterImage reconstruct(const QuantizedRecord& rec, const QuantizedDataset& ds);

/// Fraction of 24-bit color storage removed at q bits per pixel, as an exact
/// fraction (24 - q) / 24 in lowest terms.
struct CompressionRatio {
  std::int64_t numerator;
  std::int64_t denominator;

  double value() const { return static_cast<double>(numerator) / static_cast<double>(denominator); }
  friend bool operator==(const CompressionRatio&, const CompressionRatio&) = default;
};

CompressionRatio compression_ratio(int q);

/// Distinct sRGB colors over all palettes of `ds`.
std::size_t distinct_color_count(const QuantizedDataset& ds);

/// Raw sRGB images plus optional labels.
struct ImageSet {
  std::vector<RasterImage> images;
  std::vector<std::uint16_t> labels;  ///< empty, or one per image
};

// DCQI: "DCQI", u8 version = 1, u32 N, u16 H, u16 W, u8 channels = 3, N*H*W*3 bytes.
Bytes encode_images(std::span<const RasterImage> images);
std::vector<RasterImage> decode_images(std::span<const std::uint8_t> bytes);
void write_images(const std::filesystem::path& path, std::span<const RasterImage> images);
std::vector<RasterImage> load_images(const std::filesystem::path& path);

/// One integer label per line; blank lines are skipped.
std::vector<std::uint16_t> load_labels(const std::filesystem::path& path);
void write_labels(const std::filesystem::path& path, std::span<const std::uint16_t> labels);

}  // namespace dcq
