#pragma once

#include <Eigen/Dense>

#include "dcq/color.hpp"

namespace dcq {

/// Stabilizer added under the square root of the gradient magnitude.
inline constexpr double kSobelEpsilon = 1e-8;

/// Replicate-padded copy of `plane` with a one-pixel border.
template <typename Derived>
PlaneT<typename Derived::Scalar> replicate_pad(const Eigen::ArrayBase<Derived>& plane) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index h = plane.rows();
  const Eigen::Index w = plane.cols();
  PlaneT<Scalar> padded(h + 2, w + 2);
  padded.block(1, 1, h, w) = plane;
  padded.block(0, 1, 1, w) = plane.row(0);
  padded.block(h + 1, 1, 1, w) = plane.row(h - 1);
  padded.col(0) = padded.col(1);
  padded.col(w + 1) = padded.col(w);
  return padded;
}

/// Horizontal and vertical Sobel responses of one plane.
template <typename Scalar>
struct SobelResponse {
  PlaneT<Scalar> gx;
  PlaneT<Scalar> gy;
};

// Evaluated in correlation form with Sx = [[-1,0,1],[-2,0,2],[-1,0,1]] and Sy = Sx^T.
// Flipping the kernels only flips the signs of gx and gy, so magnitudes agree with
// true convolution.
template <typename Derived>
SobelResponse<typename Derived::Scalar> sobel_response(const Eigen::ArrayBase<Derived>& plane) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index h = plane.rows();
  const Eigen::Index w = plane.cols();
  const PlaneT<Scalar> p = replicate_pad(plane);
  SobelResponse<Scalar> r;
  r.gx = (p.block(0, 2, h, w) - p.block(0, 0, h, w)) +
         Scalar(2) * (p.block(1, 2, h, w) - p.block(1, 0, h, w)) +
         (p.block(2, 2, h, w) - p.block(2, 0, h, w));
  r.gy = (p.block(2, 0, h, w) - p.block(0, 0, h, w)) +
         Scalar(2) * (p.block(2, 1, h, w) - p.block(0, 1, h, w)) +
         (p.block(2, 2, h, w) - p.block(0, 2, h, w));
  return r;
}

/// sqrt(gx^2 + gy^2 + eps) per pixel.
template <typename Derived>
PlaneT<typename Derived::Scalar> sobel_magnitude(const Eigen::ArrayBase<Derived>& plane,
                                                 double epsilon = kSobelEpsilon) {
  using Scalar = typename Derived::Scalar;
  const SobelResponse<Scalar> r = sobel_response(plane);
  return (r.gx.square() + r.gy.square() + Scalar(epsilon)).sqrt();
}

/// Adjoint of sobel_response: maps upstream gradients on (gx, gy) back onto the
/// input plane. Contributions landing on the padded border are folded onto the
/// edge pixels they replicate.
template <typename Scalar>
PlaneT<Scalar> sobel_response_adjoint(const PlaneT<Scalar>& dgx, const PlaneT<Scalar>& dgy) {
  const Eigen::Index h = dgx.rows();
  const Eigen::Index w = dgx.cols();
  PlaneT<Scalar> acc = PlaneT<Scalar>::Zero(h + 2, w + 2);
  acc.block(0, 2, h, w) += dgx;
  acc.block(0, 0, h, w) -= dgx;
  acc.block(1, 2, h, w) += Scalar(2) * dgx;
  acc.block(1, 0, h, w) -= Scalar(2) * dgx;
  acc.block(2, 2, h, w) += dgx;
  acc.block(2, 0, h, w) -= dgx;

  acc.block(2, 0, h, w) += dgy;
  acc.block(0, 0, h, w) -= dgy;
  acc.block(2, 1, h, w) += Scalar(2) * dgy;
  acc.block(0, 1, h, w) -= Scalar(2) * dgy;
  acc.block(2, 2, h, w) += dgy;
  acc.block(0, 2, h, w) -= dgy;

  acc.row(1) += acc.row(0);
  acc.row(h) += acc.row(h + 1);
  acc.col(1) += acc.col(0);
  acc.col(w) += acc.col(w + 1);
  return acc.block(1, 1, h, w);
}

}  // namespace dcq
