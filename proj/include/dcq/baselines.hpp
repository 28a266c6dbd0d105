#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "dcq/color.hpp"

namespace dcq {

enum class BaselineKind { PerImageKMeans, MedianCut, Octree };

BaselineKind parse_baseline_kind(std::string_view name);
std::string_view baseline_name(BaselineKind kind);

/// Per-image palette and the nearest-color code of every pixel.
struct BaselineResult {
  Palette palette;
  std::vector<std::uint8_t> indices;
  /// Pixels that built each palette entry (0 for padding duplicates).
  std::vector<std::size_t> populations;
};

/// k-means with 2^q centers over the image's own LAB pixels.
BaselineResult per_image_kmeans(const RasterImage& img, int q, std::uint64_t seed);

/// MedianCut in RGB. The box whose longest side is longest (ties: earliest box,
/// then R < G < B) is split at the median value along that side: values below
/// the median go left, the rest right; if nothing is below the median, values
/// equal to it go left instead. Boxes spanning a single color are never split.
/// The left half keeps the parent's position and the right half is appended.
BaselineResult median_cut(const RasterImage& img, int q);

/// Octree quantizer. Colors are inserted at depth 8; while more than 2^q leaves
/// remain, the deepest node whose children are all leaves is collapsed, picking
/// the least populated one and then the lowest Morton code among equals.
/// Palette entries are leaf means in Morton order.
BaselineResult octree_quantize(const RasterImage& img, int q);

BaselineResult run_baseline(BaselineKind kind, const RasterImage& img, int q, std::uint64_t seed);

}  // namespace dcq
