#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "dcq/binary_io.hpp"
#include "dcq/color.hpp"
#include "dcq/kmeans.hpp"

namespace dcq {

/// Rows are LAB pixels.
using PixelSet = Eigen::Matrix<double, Eigen::Dynamic, 3>;

inline constexpr double kDefaultAttentionFraction = 0.5;
inline constexpr std::size_t kDefaultPixelCap = 100'000;

/// Per-pixel saliency in [0, 1], row-major, same shape as its image.
class AttentionMap {
 public:
  AttentionMap(int height, int width, PlaneT<float> values);

  int height() const { return static_cast<int>(values_.rows()); }
  int width() const { return static_cast<int>(values_.cols()); }
  const PlaneT<float>& values() const { return values_; }

 private:
  PlaneT<float> values_;
};

/// One palette per cluster, all of size 2^q.
struct ClusterPalettes {
  int q = 0;
  std::vector<Palette> palettes;
};

/// ceil(fraction * n), with products within rounding noise of an integer taken
/// as that integer, clamped to [1, n].
std::size_t attention_selection_count(std::size_t n, double fraction);

/// The highest-attention pixels of `img`, returned in row-major order.
/// Equal attention values favour the earlier pixel.
PixelSet select_attention_pixels(const LabImage& img, const AttentionMap& att, double k_gra);

/// Seeded uniform subsample without replacement; keeps the original row order.
/// Returns the input unchanged when it has at most `cap` rows.
PixelSet subsample_pixels(const PixelSet& pixels, std::size_t cap, std::uint64_t seed);

/// k-means palette with 2^q entries over `pixels`, ordered by descending
/// cluster population (ties: lower L first). When fewer than 2^q distinct
/// colors exist the distinct colors are repeated to fill the palette.
Palette build_cluster_palette(const PixelSet& pixels, int q, std::uint64_t seed, std::size_t cap = kDefaultPixelCap);

/// Shared palette for every cluster of `model`. With no attention maps every
/// pixel participates. Clusters are processed independently on up to
/// `threads` workers; the result does not depend on the thread count.
ClusterPalettes build_all_palettes(std::span<const LabImage> images, const ClusterModel& model,
                                   std::span<const AttentionMap> attention, int q,
                                   double k_gra = kDefaultAttentionFraction, std::uint64_t seed = 0,
                                   std::size_t cap = kDefaultPixelCap, int threads = 1);

/// Per-cluster seed used by build_all_palettes.
std::uint64_t palette_seed(std::uint64_t seed, std::size_t cluster);

// DCQA: "DCQA", u8 version = 1, u32 N, u16 H, u16 W, N*H*W float32 in [0, 1].
Bytes encode_attention(std::span<const AttentionMap> maps);
std::vector<AttentionMap> decode_attention(std::span<const std::uint8_t> bytes);
void write_attention(const std::filesystem::path& path, std::span<const AttentionMap> maps);
std::vector<AttentionMap> load_attention(const std::filesystem::path& path);

}  // namespace dcq
