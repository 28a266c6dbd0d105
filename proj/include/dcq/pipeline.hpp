#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dcq/baselines.hpp"
#include "dcq/eval.hpp"
#include "dcq/kmeans.hpp"
#include "dcq/palette.hpp"
#include "dcq/refine.hpp"
#include "dcq/store.hpp"

namespace dcq {

/// Settings of one quantization run. Defaults are the method's operating point.
struct PipelineConfig {
  std::filesystem::path input;   ///< DCQI file or directory of PNGs
  std::filesystem::path labels;  ///< optional label manifest
  std::filesystem::path out;     ///< DCQD output
  std::filesystem::path report;  ///< CSV output; empty means "<out>.csv"
  int q = 2;
  std::size_t k = kDefaultClusterCount;
  double k_gra = kDefaultAttentionFraction;
  std::uint64_t seed = 0;
  std::string features = "histogram";  ///< "histogram" or a DCQF path
  std::string attention = "none";      ///< "none" or a DCQA path
  bool refine = true;
  RefineConfig refine_config;
  std::string method = "dcq";  ///< dcq, kmeans, mediancut or octree
  int threads = 1;
  std::size_t pixel_cap = kDefaultPixelCap;

  void validate() const;
  std::filesystem::path report_path() const;
};

ImageSet load_image_set(const std::filesystem::path& input, const std::filesystem::path& labels = {});

/// Histogram features, or the rows of a DCQF file (one per image).
std::vector<FeatureVector> load_feature_source(const std::string& source, std::span<const RasterImage> images);

/// Empty for "none"; otherwise one map per image with matching shapes.
std::vector<AttentionMap> load_attention_source(const std::string& source, std::span<const RasterImage> images);

std::vector<LabImage> to_lab_images(std::span<const RasterImage> images, int threads = 1);

/// cluster_dataset followed by renumbering so that clusters left without
/// images are dropped; ids keep their relative order.
ClusterModel cluster_images(std::span<const FeatureVector> features, std::size_t k, std::uint64_t seed);

/// Seed of the image subsample used to refine cluster `cluster`.
std::uint64_t refine_seed(std::uint64_t seed, std::size_t cluster);

/// Refines each cluster palette on a seeded subsample of its member images.
ClusterPalettes refine_cluster_palettes(std::span<const LabImage> images, const ClusterModel& model,
                                        const ClusterPalettes& palettes, const RefineConfig& cfg, int threads = 1);

/// Hard-quantizes each image with its cluster palette and stores the palettes as sRGB.
QuantizedDataset pack_dataset(std::span<const LabImage> images, std::span<const std::uint16_t> labels,
                              const ClusterModel& model, const ClusterPalettes& palettes, int threads = 1);

/// One palette per image from a classic quantizer; record i uses palette i.
QuantizedDataset baseline_dataset(std::span<const RasterImage> images, std::span<const std::uint16_t> labels,
                                  BaselineKind kind, int q, std::uint64_t seed, int threads = 1);

struct QuantizeOutcome {
  QuantizedDataset dataset;
  DatasetReport report;
};

/// Whole pipeline in memory (no file output).
QuantizeOutcome quantize_images(const ImageSet& input, const PipelineConfig& cfg);

/// Whole pipeline from cfg.input to cfg.out and the CSV report. On failure no
/// output file is left behind.
DatasetReport run_quantize(const PipelineConfig& cfg);

// Intermediate stage artifacts (JSON).
void write_cluster_model(const std::filesystem::path& path, const ClusterModel& model);
ClusterModel load_cluster_model(const std::filesystem::path& path);
void write_cluster_palettes(const std::filesystem::path& path, const ClusterPalettes& palettes);
ClusterPalettes load_cluster_palettes(const std::filesystem::path& path);

void run_cluster_stage(const PipelineConfig& cfg, const std::filesystem::path& model_out);
void run_palettes_stage(const PipelineConfig& cfg, const std::filesystem::path& model_path,
                        const std::filesystem::path& palettes_out);
void run_refine_stage(const PipelineConfig& cfg, const std::filesystem::path& model_path,
                      const std::filesystem::path& palettes_in, const std::filesystem::path& palettes_out);
void run_pack_stage(const PipelineConfig& cfg, const std::filesystem::path& model_path,
                    const std::filesystem::path& palettes_path);

struct DatasetInfo {
  int q = 0;
  int height = 0;
  int width = 0;
  std::size_t images = 0;
  std::size_t clusters = 0;
  std::size_t distinct_colors = 0;
  std::size_t file_bytes = 0;
  std::size_t expected_bytes = 0;
};

DatasetInfo inspect_dataset(const std::filesystem::path& path);
std::string format_info(const DatasetInfo& info);

}  // namespace dcq
