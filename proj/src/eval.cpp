#include "dcq/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "dcq/error.hpp"
#include "dcq/parallel.hpp"

namespace dcq {

double psnr_from_mse(double mse) {
  if (mse <= 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

ImageMetrics image_metrics(const RasterImage& orig, const RasterImage& recon, const EdgeLossWeights& w) {
  if (orig.height() != recon.height() || orig.width() != recon.width()) {
    throw UsageError("image_metrics: shapes differ");
  }
  double sq = 0.0;
  for (std::size_t i = 0; i < orig.size(); ++i) {
    const RgbPixel a = orig[i];
    const RgbPixel b = recon[i];
    const double dr = double(a.r) - double(b.r);
    const double dg = double(a.g) - double(b.g);
    const double db = double(a.b) - double(b.b);
    sq += dr * dr + dg * dg + db * db;
  }
  ImageMetrics m;
  m.mse_rgb = sq / (3.0 * static_cast<double>(orig.size()));
  m.psnr_db = psnr_from_mse(m.mse_rgb);
  m.edge_loss = edge_loss(to_lab(orig), to_lab(recon), w);
  return m;
}

MetricSummary summarize(std::span<const double> values) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (values.empty()) return {nan, nan};
  double sum = 0.0;
  for (double v : values) sum += v;
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  const double median = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  return {sum / static_cast<double>(n), median};
}

DatasetReport evaluate_dataset(std::span<const RasterImage> originals, const QuantizedDataset& ds,
                               const EdgeLossWeights& w, std::string method, int threads) {
  const auto start = std::chrono::steady_clock::now();
  if (originals.size() != ds.num_images()) {
    throw UsageError("evaluate_dataset: " + std::to_string(originals.size()) + " originals for " +
                     std::to_string(ds.num_images()) + " quantized records");
  }
  ds.validate();
  w.validate();
  DatasetReport report;
  report.method = std::move(method);
  report.q = ds.q;
  report.rows.resize(ds.num_images());
  parallel_for(ds.num_images(), threads, [&](std::size_t i) {
    report.rows[i] = image_metrics(originals[i], reconstruct(ds.records[i], ds), w);
  });
  std::vector<double> mse, psnr, edge;
  for (const ImageMetrics& m : report.rows) {
    mse.push_back(m.mse_rgb);
    psnr.push_back(m.psnr_db);
    edge.push_back(m.edge_loss);
  }
  report.mse_rgb = summarize(mse);
  report.psnr_db = summarize(psnr);
  report.edge_loss = summarize(edge);
  report.distinct_colors = distinct_color_count(ds);
  report.compression = compression_ratio(ds.q);
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string format_report_csv(const DatasetReport& report) {
  std::ostringstream out;
  out << "image_id,method,q,mse_rgb,psnr_db,edge_loss\n";
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    const ImageMetrics& m = report.rows[i];
    out << i << ',' << report.method << ',' << report.q << ',' << format_number(m.mse_rgb) << ','
        << format_number(m.psnr_db) << ',' << format_number(m.edge_loss) << '\n';
  }
  out << "# aggregate mean_mse_rgb=" << format_number(report.mse_rgb.mean) << '\n'
      << "# aggregate median_mse_rgb=" << format_number(report.mse_rgb.median) << '\n'
      << "# aggregate mean_psnr_db=" << format_number(report.psnr_db.mean) << '\n'
      << "# aggregate median_psnr_db=" << format_number(report.psnr_db.median) << '\n'
      << "# aggregate mean_edge_loss=" << format_number(report.edge_loss.mean) << '\n'
      << "# aggregate median_edge_loss=" << format_number(report.edge_loss.median) << '\n'
      << "# aggregate images=" << report.rows.size() << '\n'
      << "# aggregate distinct_colors=" << report.distinct_colors << '\n'
      << "# aggregate compression_ratio=" << format_number(report.compression.value()) << '\n';
  return out.str();
}

void write_report_csv(const DatasetReport& report, const std::filesystem::path& path) {
  try {
    write_text_file(path, format_report_csv(report));
  } catch (const Error& e) {
    throw DataError("writing report " + path.string() + ": " + e.what());
  }
}

}  // namespace dcq
