#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dcq/color.hpp"
#include "dcq/sobel.hpp"

namespace dcq {

/// Per-channel (L, a, b) weights of the edge loss.
struct EdgeLossWeights {
  double l = 1.0;
  double a = 1.0;
  double b = 1.0;

  double operator[](int c) const { return c == 0 ? l : (c == 1 ? a : b); }

  void validate() const {
    const bool finite = std::isfinite(l) && std::isfinite(a) && std::isfinite(b);
    if (!finite || l < 0 || a < 0 || b < 0) throw UsageError("edge loss weights must be finite and non-negative");
    if (l == 0 && a == 0 && b == 0) throw UsageError("edge loss weights must not all be zero");
  }
};

struct RefineConfig {
  int steps = 100;
  double lr = 0.05;
  EdgeLossWeights weights;
  /// Images drawn per cluster when refining inside the pipeline.
  int sample_images = 64;
  std::uint64_t seed = 0;

  void validate() const {
    if (steps < 0) throw UsageError("refine steps must be >= 0");
    if (!(lr > 0) || !std::isfinite(lr)) throw UsageError("refine learning rate must be positive");
    if (sample_images < 1) throw UsageError("refine image sample count must be >= 1");
    weights.validate();
  }
};

/// Weighted sum over L, a, b of the mean squared difference between Sobel
/// gradient magnitudes of the two images.
template <typename Scalar>
Scalar edge_loss(const LabImageT<Scalar>& orig, const LabImageT<Scalar>& quant, const EdgeLossWeights& w) {
  if (!orig.same_shape(quant)) throw UsageError("edge_loss: image shapes differ");
  Scalar total = 0;
  for (int c = 0; c < 3; ++c) {
    const PlaneT<Scalar> diff = sobel_magnitude(orig.channel(c)) - sobel_magnitude(quant.channel(c));
    total += Scalar(w[c]) * diff.square().mean();
  }
  return total;
}

template <typename Scalar>
struct QuantizedImage {
  LabImageT<Scalar> image;
  std::vector<std::uint8_t> indices;
};

/// Replaces every pixel by its nearest palette color.
template <typename Scalar>
QuantizedImage<Scalar> quantize_hard(const LabImageT<Scalar>& img, const PaletteT<Scalar>& palette) {
  if (palette.empty()) throw InvalidPalette("quantize_hard: empty palette");
  QuantizedImage<Scalar> out{LabImageT<Scalar>(img.height(), img.width()), {}};
  out.indices.resize(static_cast<std::size_t>(img.size()));
  const auto& colors = palette.colors();
  for (Eigen::Index i = 0; i < img.size(); ++i) {
    const Eigen::Index k = nearest_palette_index(img.pixel(i), colors);
    out.indices[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(k);
    out.image.pixels().row(i) = colors.row(k);
  }
  return out;
}

/// Summed edge loss of a set of original images against their hard-quantized
/// versions, as a function of the palette. Original gradient magnitudes are
/// computed once.
template <typename Scalar>
class EdgeObjective {
 public:
  using Colors = typename PaletteT<Scalar>::Colors;

  EdgeObjective(std::span<const LabImageT<Scalar>> images, const EdgeLossWeights& weights)
      : images_(images), weights_(weights) {
    weights_.validate();
    if (images_.empty()) throw UsageError("edge objective needs at least one image");
    targets_.reserve(images_.size());
    for (const auto& img : images_) {
      std::array<PlaneT<Scalar>, 3> mags;
      for (int c = 0; c < 3; ++c) mags[c] = sobel_magnitude(img.channel(c));
      targets_.push_back(std::move(mags));
    }
  }

  Scalar loss(const PaletteT<Scalar>& palette) const { return evaluate(palette, nullptr); }

  /// Loss plus its gradient with respect to every palette color. The hard
  /// assignment is held fixed and passes gradients straight through to the
  /// assigned entry.
  Scalar loss_and_gradient(const PaletteT<Scalar>& palette, Colors& gradient) const {
    gradient = Colors::Zero(palette.size(), 3);
    return evaluate(palette, &gradient);
  }

 private:
  Scalar evaluate(const PaletteT<Scalar>& palette, Colors* gradient) const {
    Scalar total = 0;
    for (std::size_t n = 0; n < images_.size(); ++n) {
      const QuantizedImage<Scalar> q = quantize_hard(images_[n], palette);
      const Scalar scale = Scalar(1) / Scalar(q.image.size());
      for (int c = 0; c < 3; ++c) {
        const Scalar w = Scalar(weights_[c]);
        const SobelResponse<Scalar> r = sobel_response(q.image.channel(c));
        const PlaneT<Scalar> mag = (r.gx.square() + r.gy.square() + Scalar(kSobelEpsilon)).sqrt();
        const PlaneT<Scalar> diff = mag - targets_[n][c];
        total += w * diff.square().mean();
        if (gradient == nullptr || w == Scalar(0)) continue;
        const PlaneT<Scalar> dmag = Scalar(2) * w * scale * diff / mag;
        const PlaneT<Scalar> dgx = dmag * r.gx;
        const PlaneT<Scalar> dgy = dmag * r.gy;
        const PlaneT<Scalar> dq = sobel_response_adjoint<Scalar>(dgx, dgy);
        const Scalar* dq_data = dq.data();
        for (Eigen::Index i = 0; i < q.image.size(); ++i) {
          (*gradient)(q.indices[static_cast<std::size_t>(i)], c) += dq_data[i];
        }
      }
    }
    return total;
  }

  std::span<const LabImageT<Scalar>> images_;
  EdgeLossWeights weights_;
  std::vector<std::array<PlaneT<Scalar>, 3>> targets_;
};

/// Gradient of the summed edge loss over `images` with respect to each palette color.
template <typename Scalar>
typename PaletteT<Scalar>::Colors edge_loss_gradient(std::span<const LabImageT<Scalar>> images,
                                                     const PaletteT<Scalar>& palette,
                                                     const EdgeLossWeights& w) {
  typename PaletteT<Scalar>::Colors grad;
  EdgeObjective<Scalar>(images, w).loss_and_gradient(palette, grad);
  return grad;
}

template <typename Scalar>
struct RefineResult {
  PaletteT<Scalar> palette;
  /// Loss of the starting palette followed by the loss after every accepted step.
  std::vector<Scalar> history;
};

/// Number of times the step size is halved before refinement gives up.
inline constexpr int kMaxStepHalvings = 10;

/// Gradient descent on the palette that only accepts steps which do not
/// increase the edge loss. A rejected step is retried with half the step size.
template <typename Scalar>
RefineResult<Scalar> refine_palette(std::span<const LabImageT<Scalar>> images, const PaletteT<Scalar>& palette,
                                    const RefineConfig& cfg) {
  cfg.validate();
  const EdgeObjective<Scalar> objective(images, cfg.weights);
  RefineResult<Scalar> result{palette, {}};
  typename PaletteT<Scalar>::Colors grad;
  Scalar current = objective.loss_and_gradient(result.palette, grad);
  result.history.push_back(current);

  for (int step = 0; step < cfg.steps; ++step) {
    bool accepted = false;
    Scalar lr = Scalar(cfg.lr);
    for (int attempt = 0; attempt <= kMaxStepHalvings; ++attempt, lr /= Scalar(2)) {
      typename PaletteT<Scalar>::Colors proposal = result.palette.colors() - lr * grad;
      proposal.col(0) = proposal.col(0).cwiseMax(Scalar(0)).cwiseMin(Scalar(100));
      PaletteT<Scalar> candidate(std::move(proposal));
      typename PaletteT<Scalar>::Colors candidate_grad;
      const Scalar loss = objective.loss_and_gradient(candidate, candidate_grad);
      if (loss <= current) {
        result.palette = std::move(candidate);
        grad = std::move(candidate_grad);
        current = loss;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    result.history.push_back(current);
  }
  return result;
}

}  // namespace dcq
