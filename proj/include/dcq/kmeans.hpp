#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace dcq {

using FeatureVector = Eigen::VectorXd;

inline constexpr std::size_t kDefaultClusterCount = 20;
inline constexpr std::size_t kDefaultMaxIterations = 100;
inline constexpr double kDefaultTolerance = 1e-4;
inline constexpr std::size_t kDefaultRestarts = 4;

/// Result of a k-means run. Row i of `centroids` is cluster i.
struct ClusterModel {
  std::size_t k = 0;
  Eigen::MatrixXd centroids;
  std::vector<std::size_t> assignments;
  double inertia = 0.0;
  std::uint64_t seed = 0;
  /// Inertia after every assignment pass, first entry from the initial centers.
  std::vector<double> inertia_history;

  std::vector<std::size_t> cluster_sizes() const;
};

/// Lloyd's algorithm from k-means++ seeding. Points are the rows of `points`.
///
/// Stops when the relative inertia improvement drops below `tol` or after
/// `max_iters` centroid updates. A cluster that loses all its points is
/// re-seeded at the point farthest from its current centroid. Assignment ties
/// go to the lowest cluster index. The whole procedure runs `restarts` times
/// from independent seedings (the first uses `seed` itself) and the lowest
/// inertia wins, the earliest run on ties.
ClusterModel kmeans(const Eigen::Ref<const Eigen::MatrixXd>& points, std::size_t k, std::uint64_t seed,
                    std::size_t max_iters = kDefaultMaxIterations, double tol = kDefaultTolerance,
                    std::size_t restarts = kDefaultRestarts);

ClusterModel kmeans(std::span<const FeatureVector> points, std::size_t k, std::uint64_t seed,
                    std::size_t max_iters = kDefaultMaxIterations, double tol = kDefaultTolerance,
                    std::size_t restarts = kDefaultRestarts);

/// k-means with the dataset-level defaults.
ClusterModel cluster_dataset(std::span<const FeatureVector> features, std::size_t k = kDefaultClusterCount,
                             std::uint64_t seed = 0);

/// Stacks feature vectors as matrix rows; all must share one dimension.
Eigen::MatrixXd stack_features(std::span<const FeatureVector> features);

/// Sum of squared distances of each point to the centroid of its cluster.
double inertia_of(const Eigen::Ref<const Eigen::MatrixXd>& points, const Eigen::MatrixXd& centroids,
                  std::span<const std::size_t> assignments);

}  // namespace dcq
