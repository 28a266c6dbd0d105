#include "dcq/kmeans.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "dcq/error.hpp"
#include "dcq/random.hpp"

namespace dcq {

namespace {

// Points and centroids are stored column-wise (one column per point) so each
// distance evaluation touches contiguous memory.
double assign(const Eigen::MatrixXd& pts, const Eigen::MatrixXd& cents, std::vector<std::size_t>& labels,
              std::vector<double>& dist) {
  const Eigen::Index n = pts.cols();
  const Eigen::Index k = cents.cols();
  double inertia = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    Eigen::Index best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < k; ++i) {
      const double d = (pts.col(j) - cents.col(i)).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    labels[static_cast<std::size_t>(j)] = static_cast<std::size_t>(best);
    dist[static_cast<std::size_t>(j)] = best_d;
    inertia += best_d;
  }
  return inertia;
}

Eigen::MatrixXd seed_plus_plus(const Eigen::MatrixXd& pts, std::size_t k, Rng& rng) {
  const auto n = static_cast<std::size_t>(pts.cols());
  Eigen::MatrixXd cents(pts.rows(), static_cast<Eigen::Index>(k));
  std::size_t first = rng.index(n);
  cents.col(0) = pts.col(static_cast<Eigen::Index>(first));
  std::vector<double> mind(n);
  for (std::size_t j = 0; j < n; ++j) {
    mind[j] = (pts.col(static_cast<Eigen::Index>(j)) - cents.col(0)).squaredNorm();
  }
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (double d : mind) total += d;
    std::size_t pick = 0;
    const double r = rng.uniform() * total;
    if (total > 0.0) {
      double acc = 0.0;
      std::size_t last_positive = 0;
      bool found = false;
      for (std::size_t j = 0; j < n; ++j) {
        if (mind[j] <= 0.0) continue;
        last_positive = j;
        acc += mind[j];
        if (acc > r) {
          pick = j;
          found = true;
          break;
        }
      }
      if (!found) pick = last_positive;
    }
    cents.col(static_cast<Eigen::Index>(c)) = pts.col(static_cast<Eigen::Index>(pick));
    for (std::size_t j = 0; j < n; ++j) {
      const double d = (pts.col(static_cast<Eigen::Index>(j)) - cents.col(static_cast<Eigen::Index>(c))).squaredNorm();
      if (d < mind[j]) mind[j] = d;
    }
  }
  return cents;
}

constexpr std::uint64_t kRestartStream = 0x494E4954;  // "INIT"

// One k-means++ seeding followed by Lloyd iterations.
ClusterModel lloyd(const Eigen::MatrixXd& pts, std::size_t k, Rng& rng, std::size_t max_iters, double tol) {
  const auto n = static_cast<std::size_t>(pts.cols());
  Eigen::MatrixXd cents = seed_plus_plus(pts, k, rng);

  std::vector<std::size_t> labels(n);
  std::vector<double> dist(n);
  double inertia = assign(pts, cents, labels, dist);

  ClusterModel model;
  model.inertia_history.push_back(inertia);

  std::vector<std::size_t> next_labels(n);
  std::vector<double> next_dist(n);
  for (std::size_t iter = 0; iter < max_iters && inertia > 0.0; ++iter) {
    Eigen::MatrixXd next = Eigen::MatrixXd::Zero(pts.rows(), static_cast<Eigen::Index>(k));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t j = 0; j < n; ++j) {
      next.col(static_cast<Eigen::Index>(labels[j])) += pts.col(static_cast<Eigen::Index>(j));
      ++counts[labels[j]];
    }
    std::vector<double> spare = dist;
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        next.col(static_cast<Eigen::Index>(c)) /= static_cast<double>(counts[c]);
        continue;
      }
      std::size_t far = 0;
      for (std::size_t j = 1; j < n; ++j) {
        if (spare[j] > spare[far]) far = j;
      }
      next.col(static_cast<Eigen::Index>(c)) = pts.col(static_cast<Eigen::Index>(far));
      spare[far] = -1.0;
    }

    const double next_inertia = assign(pts, next, next_labels, next_dist);
    // Floating-point round-off can make a converged update marginally worse; keep the old state then.
    if (next_inertia > inertia) break;
    const double improvement = inertia - next_inertia;
    cents.swap(next);
    labels.swap(next_labels);
    dist.swap(next_dist);
    const double previous = inertia;
    inertia = next_inertia;
    model.inertia_history.push_back(inertia);
    if (improvement <= tol * previous) break;
  }

  model.k = k;
  model.centroids = cents.transpose();
  model.assignments = std::move(labels);
  model.inertia = inertia;
  return model;
}

}  // namespace

std::vector<std::size_t> ClusterModel::cluster_sizes() const {
  std::vector<std::size_t> sizes(k, 0);
  for (std::size_t a : assignments) ++sizes[a];
  return sizes;
}

ClusterModel kmeans(const Eigen::Ref<const Eigen::MatrixXd>& points, std::size_t k, std::uint64_t seed,
                    std::size_t max_iters, double tol, std::size_t restarts) {
  const auto n = static_cast<std::size_t>(points.rows());
  if (k < 1) throw UsageError("kmeans: k must be >= 1");
  if (n == 0) throw UsageError("kmeans: no points");
  if (k > n) {
    throw UsageError("kmeans: k = " + std::to_string(k) + " exceeds the number of points (" + std::to_string(n) + ")");
  }
  if (restarts < 1) throw UsageError("kmeans: restarts must be >= 1");
  if (!points.allFinite()) throw DataError("kmeans: non-finite feature value");

  const Eigen::MatrixXd pts = points.transpose();
  ClusterModel best;
  for (std::size_t r = 0; r < restarts; ++r) {
    Rng rng(r == 0 ? seed : derive_seed(seed, kRestartStream, r));
    ClusterModel run = lloyd(pts, k, rng, max_iters, tol);
    if (r == 0 || run.inertia < best.inertia) best = std::move(run);
    if (best.inertia == 0.0) break;
  }
  best.seed = seed;
  return best;
}

Eigen::MatrixXd stack_features(std::span<const FeatureVector> features) {
  if (features.empty()) return Eigen::MatrixXd(0, 0);
  const Eigen::Index dim = features.front().size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(features.size()), dim);
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].size() != dim) {
      throw DataError("feature " + std::to_string(i) + " has dimension " + std::to_string(features[i].size()) +
                      ", expected " + std::to_string(dim));
    }
    m.row(static_cast<Eigen::Index>(i)) = features[i].transpose();
  }
  return m;
}

ClusterModel kmeans(std::span<const FeatureVector> points, std::size_t k, std::uint64_t seed, std::size_t max_iters,
                    double tol, std::size_t restarts) {
  return kmeans(stack_features(points), k, seed, max_iters, tol, restarts);
}

ClusterModel cluster_dataset(std::span<const FeatureVector> features, std::size_t k, std::uint64_t seed) {
  return kmeans(features, k, seed, kDefaultMaxIterations, kDefaultTolerance);
}

double inertia_of(const Eigen::Ref<const Eigen::MatrixXd>& points, const Eigen::MatrixXd& centroids,
                  std::span<const std::size_t> assignments) {
  double total = 0.0;
  for (Eigen::Index j = 0; j < points.rows(); ++j) {
    total += (points.row(j) - centroids.row(static_cast<Eigen::Index>(assignments[static_cast<std::size_t>(j)])))
                 .squaredNorm();
  }
  return total;
}

}  // namespace dcq
