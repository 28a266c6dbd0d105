#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "dcq/color.hpp"

namespace dcq::test {

inline RasterImage random_image(int h, int w, std::mt19937_64& rng, int levels = 256) {
  std::uniform_int_distribution<int> d(0, levels - 1);
  const int step = 255 / std::max(levels - 1, 1);
  RasterImage img(h, w);
  for (RgbPixel& p : img.pixels()) {
    p = {static_cast<std::uint8_t>(d(rng) * step), static_cast<std::uint8_t>(d(rng) * step),
         static_cast<std::uint8_t>(d(rng) * step)};
  }
  return img;
}

inline LabImage random_lab_image(int h, int w, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> l(0.0, 100.0);
  std::uniform_real_distribution<double> ab(-80.0, 80.0);
  LabImage img(h, w);
  for (Eigen::Index i = 0; i < img.size(); ++i) img.pixels().row(i) << l(rng), ab(rng), ab(rng);
  return img;
}

inline Palette random_palette(Eigen::Index n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> l(0.0, 100.0);
  std::uniform_real_distribution<double> ab(-80.0, 80.0);
  Palette::Colors c(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) c.row(i) << l(rng), ab(rng), ab(rng);
  return Palette(std::move(c));
}

/// Image whose left half is `left` and right half is `right`.
inline RasterImage two_region_image(int h, int w, RgbPixel left, RgbPixel right) {
  RasterImage img(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) img.at(y, x) = x < w / 2 ? left : right;
  }
  return img;
}

/// Two flat regions joined by a soft ramp, with a little per-pixel noise.
inline RasterImage mild_edge_image(int h, int w, const int (&left)[3], const int (&right)[3], int ramp_start,
                                   std::mt19937_64& rng) {
  std::uniform_int_distribution<int> noise(-3, 3);
  const int ramp = std::max(2, w / 4);
  RasterImage img(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double t = std::clamp((x - ramp_start + 0.5) / ramp, 0.0, 1.0);
      int v[3];
      for (int c = 0; c < 3; ++c) {
        v[c] = std::clamp(static_cast<int>(std::lround(left[c] + t * (right[c] - left[c]))) + noise(rng), 0, 255);
      }
      img.at(y, x) = {static_cast<std::uint8_t>(v[0]), static_cast<std::uint8_t>(v[1]), static_cast<std::uint8_t>(v[2])};
    }
  }
  return img;
}

/// `count` mild-edge images sharing one random pair of region colors; the ramp position varies.
inline std::vector<RasterImage> mild_edge_set(int count, int h, int w, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> base(60, 190);
  std::uniform_int_distribution<int> offset(-45, 45);
  int left[3];
  int right[3];
  for (int c = 0; c < 3; ++c) {
    left[c] = base(rng);
    right[c] = std::clamp(left[c] + offset(rng), 0, 255);
  }
  std::uniform_int_distribution<int> start(w / 4, w / 2);
  std::vector<RasterImage> out;
  for (int i = 0; i < count; ++i) out.push_back(mild_edge_image(h, w, left, right, start(rng), rng));
  return out;
}

/// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("dcq_" + tag + "_" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace dcq::test
