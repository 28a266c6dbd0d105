#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "dcq/color.hpp"
#include "dcq/refine.hpp"
#include "dcq/store.hpp"

namespace dcq {

struct ImageMetrics {
  double mse_rgb = 0.0;
  /// +infinity when mse_rgb is zero.
  double psnr_db = 0.0;
  double edge_loss = 0.0;
};

struct MetricSummary {
  double mean = 0.0;
  double median = 0.0;
};

struct DatasetReport {
  std::string method;
  int q = 0;
  std::vector<ImageMetrics> rows;
  MetricSummary mse_rgb;
  MetricSummary psnr_db;
  MetricSummary edge_loss;
  std::size_t distinct_colors = 0;
  CompressionRatio compression{0, 1};
  /// Not written to the CSV, which must stay byte-reproducible.
  double seconds = 0.0;
};

double psnr_from_mse(double mse);

ImageMetrics image_metrics(const RasterImage& orig, const RasterImage& recon, const EdgeLossWeights& w = {});

/// Mean and median of a column; NaN for an empty column.
MetricSummary summarize(std::span<const double> values);

/// Reconstructs every record of `ds` and scores it against `originals`.
/// Records are scored on up to `threads` workers.
DatasetReport evaluate_dataset(std::span<const RasterImage> originals, const QuantizedDataset& ds,
                               const EdgeLossWeights& w = {}, std::string method = "dcq", int threads = 1);

/// Fixed-format CSV: header, one row per image, then "# aggregate" lines.
std::string format_report_csv(const DatasetReport& report);
void write_report_csv(const DatasetReport& report, const std::filesystem::path& path);

/// Formats with 9 significant digits; "inf" / "nan" for non-finite values.
std::string format_number(double v);

}  // namespace dcq
