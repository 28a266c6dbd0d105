#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "dcq/error.hpp"

namespace dcq {

/// 8-bit sRGB pixel.
struct RgbPixel {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend auto operator<=>(const RgbPixel&, const RgbPixel&) = default;
};

/// CIE 1976 L*a*b* triple (L, a, b).
template <typename Scalar>
using LabT = Eigen::Matrix<Scalar, 3, 1>;
using LabPixel = LabT<double>;

/// Single-channel image plane, row-major so that (row, col) matches pixel order.
template <typename Scalar>
using PlaneT = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Plane = PlaneT<double>;

/// Thrown when a palette is empty or its size is not a power of two.
class InvalidPalette : public InvariantError {
 public:
  using InvariantError::InvariantError;
};

/// H x W image of 8-bit sRGB pixels stored row-major.
class RasterImage {
 public:
  RasterImage(int height, int width, RgbPixel fill = {});
  RasterImage(int height, int width, std::vector<RgbPixel> pixels);

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return pixels_.size(); }

  std::span<const RgbPixel> pixels() const { return pixels_; }
  std::span<RgbPixel> pixels() { return pixels_; }

  const RgbPixel& operator[](std::size_t i) const { return pixels_[i]; }
  RgbPixel& operator[](std::size_t i) { return pixels_[i]; }
  const RgbPixel& at(int y, int x) const { return pixels_[index(y, x)]; }
  RgbPixel& at(int y, int x) { return pixels_[index(y, x)]; }

  friend bool operator==(const RasterImage&, const RasterImage&) = default;

 private:
  std::size_t index(int y, int x) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int height_;
  int width_;
  std::vector<RgbPixel> pixels_;
};

/// H x W image of LAB pixels. Pixels are the rows of an (H*W) x 3 matrix;
/// the matrix is column-major so each channel is one contiguous plane.
template <typename Scalar>
class LabImageT {
 public:
  using PixelMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, 3>;
  using ChannelMap = Eigen::Map<PlaneT<Scalar>>;
  using ConstChannelMap = Eigen::Map<const PlaneT<Scalar>>;

  LabImageT(int height, int width) : LabImageT(height, width, PixelMatrix::Zero(checked_area(height, width), 3)) {}

  LabImageT(int height, int width, PixelMatrix pixels)
      : height_(height), width_(width), pixels_(std::move(pixels)) {
    if (pixels_.rows() != checked_area(height, width)) {
      throw UsageError("LabImage pixel count does not match its shape");
    }
  }

  int height() const { return height_; }
  int width() const { return width_; }
  Eigen::Index size() const { return pixels_.rows(); }

  const PixelMatrix& pixels() const { return pixels_; }
  PixelMatrix& pixels() { return pixels_; }

  LabT<Scalar> pixel(Eigen::Index i) const { return pixels_.row(i).transpose(); }

  ConstChannelMap channel(int c) const { return ConstChannelMap(pixels_.col(c).data(), height_, width_); }
  ChannelMap channel(int c) { return ChannelMap(pixels_.col(c).data(), height_, width_); }

  bool same_shape(const LabImageT& other) const {
    return height_ == other.height_ && width_ == other.width_;
  }

  template <typename Other>
  LabImageT<Other> cast() const {
    return LabImageT<Other>(height_, width_, pixels_.template cast<Other>());
  }

 private:
  static Eigen::Index checked_area(int height, int width) {
    if (height < 1 || width < 1) throw UsageError("image dimensions must be positive");
    return static_cast<Eigen::Index>(height) * width;
  }

  int height_;
  int width_;
  PixelMatrix pixels_;
};
using LabImage = LabImageT<double>;

/// Ordered list of LAB colors; the position of a color is its stored code.
/// A non-empty palette always holds a power-of-two number of colors (1..256).
/// A default-constructed palette is empty and rejected by every lookup.
template <typename Scalar>
class PaletteT {
 public:
  using Colors = Eigen::Matrix<Scalar, Eigen::Dynamic, 3>;

  PaletteT() = default;

  explicit PaletteT(Colors colors) : colors_(std::move(colors)) {
    const auto n = colors_.rows();
    if (n < 1 || n > 256 || (n & (n - 1)) != 0) {
      throw InvalidPalette("palette size must be a power of two in [1, 256], got " +
                           std::to_string(n));
    }
    for (Eigen::Index i = 0; i < n && !duplicates_; ++i) {
      for (Eigen::Index j = i + 1; j < n; ++j) {
        if (colors_.row(i) == colors_.row(j)) {
          duplicates_ = true;
          break;
        }
      }
    }
  }

  Eigen::Index size() const { return colors_.rows(); }
  bool empty() const { return colors_.rows() == 0; }

  /// log2(size()).
  int bits() const {
    int q = 0;
    while ((Eigen::Index{1} << q) < colors_.rows()) ++q;
    return q;
  }

  const Colors& colors() const { return colors_; }
  LabT<Scalar> color(Eigen::Index i) const { return colors_.row(i).transpose(); }

  /// True when at least two entries are identical (padding of degenerate inputs).
  bool has_duplicates() const { return duplicates_; }

  template <typename Other>
  PaletteT<Other> cast() const {
    return PaletteT<Other>(colors_.template cast<Other>());
  }

 private:
  Colors colors_;
  bool duplicates_ = false;
};
using Palette = PaletteT<double>;

namespace detail {

template <typename Scalar>
Scalar srgb_decode(Scalar c) {
  using std::pow;
  return c <= Scalar(0.04045) ? c / Scalar(12.92) : pow((c + Scalar(0.055)) / Scalar(1.055), Scalar(2.4));
}

template <typename Scalar>
Scalar srgb_encode(Scalar c) {
  using std::pow;
  return c <= Scalar(0.0031308) ? c * Scalar(12.92) : Scalar(1.055) * pow(c, Scalar(1) / Scalar(2.4)) - Scalar(0.055);
}

// Linear sRGB -> XYZ, D65.
template <typename Scalar>
const Eigen::Matrix<Scalar, 3, 3>& rgb_to_xyz() {
  static const Eigen::Matrix<Scalar, 3, 3> m = [] {
    Eigen::Matrix<Scalar, 3, 3> r;
    r << Scalar(0.4124564), Scalar(0.3575761), Scalar(0.1804375),
         Scalar(0.2126729), Scalar(0.7151522), Scalar(0.0721750),
         Scalar(0.0193339), Scalar(0.1191920), Scalar(0.9503041);
    return r;
  }();
  return m;
}

template <typename Scalar>
const Eigen::Matrix<Scalar, 3, 3>& xyz_to_rgb() {
  static const Eigen::Matrix<Scalar, 3, 3> m = rgb_to_xyz<Scalar>().inverse();
  return m;
}

// Reference white is the image of linear (1, 1, 1) so that sRGB white maps to L=100, a=b=0.
template <typename Scalar>
const Eigen::Matrix<Scalar, 3, 1>& white_point() {
  static const Eigen::Matrix<Scalar, 3, 1> w = rgb_to_xyz<Scalar>().rowwise().sum();
  return w;
}

template <typename Scalar>
Scalar lab_f(Scalar t) {
  using std::cbrt;
  constexpr double delta = 6.0 / 29.0;
  return t > Scalar(delta * delta * delta) ? cbrt(t) : t / Scalar(3.0 * delta * delta) + Scalar(4.0 / 29.0);
}

template <typename Scalar>
Scalar lab_f_inverse(Scalar t) {
  constexpr double delta = 6.0 / 29.0;
  return t > Scalar(delta) ? t * t * t : Scalar(3.0 * delta * delta) * (t - Scalar(4.0 / 29.0));
}

}  // namespace detail

/// Continuous sRGB (channels nominally in [0, 255]) to LAB.
template <typename Scalar>
LabT<Scalar> srgb_to_lab(const Eigen::Matrix<Scalar, 3, 1>& rgb) {
  Eigen::Matrix<Scalar, 3, 1> linear;
  for (int c = 0; c < 3; ++c) linear[c] = detail::srgb_decode(rgb[c] / Scalar(255));
  const Eigen::Matrix<Scalar, 3, 1> xyz =
      (detail::rgb_to_xyz<Scalar>() * linear).cwiseQuotient(detail::white_point<Scalar>());
  const Scalar fx = detail::lab_f(xyz[0]);
  const Scalar fy = detail::lab_f(xyz[1]);
  const Scalar fz = detail::lab_f(xyz[2]);
  return LabT<Scalar>(Scalar(116) * fy - Scalar(16), Scalar(500) * (fx - fy), Scalar(200) * (fy - fz));
}

template <typename Scalar = double>
LabT<Scalar> srgb_to_lab(RgbPixel p) {
  return srgb_to_lab(Eigen::Matrix<Scalar, 3, 1>(Scalar(p.r), Scalar(p.g), Scalar(p.b)));
}

/// LAB to 8-bit sRGB; out-of-gamut channels are clamped after gamma encoding.
template <typename Scalar>
RgbPixel lab_to_srgb(const LabT<Scalar>& lab) {
  const Scalar fy = (lab[0] + Scalar(16)) / Scalar(116);
  const Scalar fx = fy + lab[1] / Scalar(500);
  const Scalar fz = fy - lab[2] / Scalar(200);
  const Eigen::Matrix<Scalar, 3, 1> xyz =
      Eigen::Matrix<Scalar, 3, 1>(detail::lab_f_inverse(fx), detail::lab_f_inverse(fy), detail::lab_f_inverse(fz))
          .cwiseProduct(detail::white_point<Scalar>());
  const Eigen::Matrix<Scalar, 3, 1> linear = detail::xyz_to_rgb<Scalar>() * xyz;
  std::uint8_t out[3];
  for (int c = 0; c < 3; ++c) {
    Scalar v = detail::srgb_encode(std::max(linear[c], Scalar(0)));
    v = std::clamp(v, Scalar(0), Scalar(1));
    out[c] = static_cast<std::uint8_t>(std::lround(static_cast<double>(v * Scalar(255))));
  }
  return {out[0], out[1], out[2]};
}

/// Index of the palette row closest to `p` in squared Euclidean LAB distance.
/// Ties resolve to the lowest index.
template <typename Scalar, typename Derived>
Eigen::Index nearest_palette_index(const LabT<Scalar>& p, const Eigen::MatrixBase<Derived>& colors) {
  if (colors.rows() == 0) throw InvalidPalette("nearest color lookup on an empty palette");
  Eigen::Index best = 0;
  Scalar best_d = std::numeric_limits<Scalar>::infinity();
  for (Eigen::Index i = 0; i < colors.rows(); ++i) {
    const Scalar d = (colors.row(i).transpose() - p).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

template <typename Scalar>
Eigen::Index nearest_palette_index(const LabT<Scalar>& p, const PaletteT<Scalar>& palette) {
  return nearest_palette_index(p, palette.colors());
}

LabImage to_lab(const RasterImage& img);
RasterImage to_raster(const LabImage& img);

}  // namespace dcq
