#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "dcq/binary_io.hpp"
#include "dcq/color.hpp"
#include "dcq/kmeans.hpp"

namespace dcq {

inline constexpr int kHistogramBins = 16;
inline constexpr int kHistogramDim = 3 * kHistogramBins;

/// Per-channel 16-bin RGB histograms (bin = value / 16), each normalized to
/// sum to one, concatenated as R, G, B.
FeatureVector color_histogram_features(const RasterImage& img);

// DCQF: "DCQF", u8 version = 1, u32 N, u32 D, N*D float32, little-endian, row-major.
Bytes encode_features(std::span<const FeatureVector> features);
std::vector<FeatureVector> decode_features(std::span<const std::uint8_t> bytes);

void write_features(const std::filesystem::path& path, std::span<const FeatureVector> features);
std::vector<FeatureVector> load_features(const std::filesystem::path& path);

}  // namespace dcq
