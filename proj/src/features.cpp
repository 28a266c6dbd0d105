#include "dcq/features.hpp"

#include <cmath>
#include <limits>

#include "dcq/error.hpp"

namespace dcq {

namespace {
constexpr std::uint8_t kFeatureVersion = 1;
}

FeatureVector color_histogram_features(const RasterImage& img) {
  FeatureVector f = FeatureVector::Zero(kHistogramDim);
  for (const RgbPixel& p : img.pixels()) {
    f[p.r / 16] += 1.0;
    f[kHistogramBins + p.g / 16] += 1.0;
    f[2 * kHistogramBins + p.b / 16] += 1.0;
  }
  return f / static_cast<double>(img.size());
}

Bytes encode_features(std::span<const FeatureVector> features) {
  const Eigen::MatrixXd m = stack_features(features);
  if (!m.allFinite()) throw DataError("DCQF: refusing to write non-finite feature values");
  if (m.rows() > std::numeric_limits<std::uint32_t>::max() || m.cols() > std::numeric_limits<std::uint32_t>::max()) {
    throw DataError("DCQF: too many features");
  }
  ByteWriter w;
  w.magic("DCQF");
  w.u8(kFeatureVersion);
  w.u32(static_cast<std::uint32_t>(m.rows()));
  w.u32(static_cast<std::uint32_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) w.f32(static_cast<float>(m(i, j)));
  }
  return w.take();
}

std::vector<FeatureVector> decode_features(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, "DCQF");
  r.expect_magic("DCQF");
  const std::uint8_t version = r.u8();
  if (version != kFeatureVersion) r.fail("unsupported version " + std::to_string(version));
  const std::uint32_t n = r.u32();
  const std::uint32_t d = r.u32();
  r.expect_remaining(std::size_t{n} * d * 4, "feature payload");
  std::vector<FeatureVector> out(n, FeatureVector(d));
  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::uint32_t j = 0; j < d; ++j) {
      const float v = r.f32();
      if (!std::isfinite(v)) {
        throw DataError("DCQF: non-finite value at row " + std::to_string(i) + ", column " + std::to_string(j));
      }
      out[i][j] = v;
    }
  }
  return out;
}

void write_features(const std::filesystem::path& path, std::span<const FeatureVector> features) {
  write_file(path, encode_features(features));
}

std::vector<FeatureVector> load_features(const std::filesystem::path& path) {
  return decode_features(read_file(path));
}

}  // namespace dcq
