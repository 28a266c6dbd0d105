#include "dcq/color.hpp"

#include <array>

namespace dcq {

RasterImage::RasterImage(int height, int width, RgbPixel fill) : height_(height), width_(width) {
  if (height < 1 || width < 1) throw UsageError("image dimensions must be positive");
  pixels_.assign(static_cast<std::size_t>(height) * static_cast<std::size_t>(width), fill);
}

RasterImage::RasterImage(int height, int width, std::vector<RgbPixel> pixels)
    : height_(height), width_(width), pixels_(std::move(pixels)) {
  if (height < 1 || width < 1) throw UsageError("image dimensions must be positive");
  if (pixels_.size() != static_cast<std::size_t>(height) * static_cast<std::size_t>(width)) {
    throw UsageError("pixel buffer length " + std::to_string(pixels_.size()) + " does not match " +
                     std::to_string(height) + "x" + std::to_string(width));
  }
}

namespace {

// Per-channel decode table; the 3x3 transform still runs per pixel.
const std::array<double, 256>& linear_table() {
  static const std::array<double, 256> table = [] {
    std::array<double, 256> t{};
    for (int v = 0; v < 256; ++v) t[v] = detail::srgb_decode(double(v) / 255.0);
    return t;
  }();
  return table;
}

}  // namespace

LabImage to_lab(const RasterImage& img) {
  LabImage out(img.height(), img.width());
  const auto& lin = linear_table();
  const Eigen::Matrix3d& m = detail::rgb_to_xyz<double>();
  const Eigen::Vector3d& white = detail::white_point<double>();
  auto& px = out.pixels();
  for (std::size_t i = 0; i < img.size(); ++i) {
    const RgbPixel p = img[i];
    const Eigen::Vector3d xyz = (m * Eigen::Vector3d(lin[p.r], lin[p.g], lin[p.b])).cwiseQuotient(white);
    const double fx = detail::lab_f(xyz[0]);
    const double fy = detail::lab_f(xyz[1]);
    const double fz = detail::lab_f(xyz[2]);
    const auto row = static_cast<Eigen::Index>(i);
    px(row, 0) = 116.0 * fy - 16.0;
    px(row, 1) = 500.0 * (fx - fy);
    px(row, 2) = 200.0 * (fy - fz);
  }
  return out;
}

RasterImage to_raster(const LabImage& img) {
  RasterImage out(img.height(), img.width());
  for (Eigen::Index i = 0; i < img.size(); ++i) out[static_cast<std::size_t>(i)] = lab_to_srgb(img.pixel(i));
  return out;
}

}  // namespace dcq
