#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <cstring>
#include <set>

#include "dcq/binary_io.hpp"
#include "dcq/error.hpp"
#include "dcq/features.hpp"
#include "dcq/kmeans.hpp"
#include "helpers.hpp"

using namespace dcq;

namespace {

// Minimum inertia over every assignment of the rows to k labels.
double exhaustive_inertia(const Eigen::MatrixXd& pts, std::size_t k) {
  const auto n = static_cast<std::size_t>(pts.rows());
  std::vector<std::size_t> label(n, 0);
  double best = std::numeric_limits<double>::infinity();
  while (true) {
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k), pts.cols());
    std::vector<double> counts(k, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      sums.row(static_cast<Eigen::Index>(label[i])) += pts.row(static_cast<Eigen::Index>(i));
      counts[label[i]] += 1;
    }
    double total = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<Eigen::Index>(label[i]);
      total += (pts.row(static_cast<Eigen::Index>(i)) - sums.row(c) / counts[label[i]]).squaredNorm();
    }
    best = std::min(best, total);
    std::size_t pos = 0;
    while (pos < n && ++label[pos] == k) label[pos++] = 0;
    if (pos == n) break;
  }
  return best;
}

Eigen::MatrixXd separated_triples(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> jitter(-1.0, 1.0);
  std::uniform_real_distribution<double> center(-100.0, 100.0);
  Eigen::MatrixXd pts(12, 2);
  std::vector<Eigen::Vector2d> centers;
  while (centers.size() < 3) {
    const Eigen::Vector2d c(center(rng), center(rng));
    bool far = true;
    for (const auto& o : centers) far = far && (o - c).norm() > 40.0;
    if (far) centers.push_back(c);
  }
  for (int i = 0; i < 12; ++i) {
    pts.row(i) = (centers[static_cast<std::size_t>(i / 4)] + Eigen::Vector2d(jitter(rng), jitter(rng))).transpose();
  }
  return pts;
}

}  // namespace

TEST_CASE("color_histogram_features: solid color") {
  const RasterImage img(4, 5, RgbPixel{32, 200, 100});
  const FeatureVector f = color_histogram_features(img);
  REQUIRE(f.size() == kHistogramDim);
  CHECK((f.array() != 0).count() == 3);
  CHECK(f[2] == 1.0);
  CHECK(f[16 + 12] == 1.0);
  CHECK(f[32 + 6] == 1.0);
}

TEST_CASE("color_histogram_features: half black, half white") {
  const RasterImage img = test::two_region_image(4, 4, {0, 0, 0}, {255, 255, 255});
  const FeatureVector f = color_histogram_features(img);
  for (int c = 0; c < 3; ++c) {
    CHECK(f[c * 16] == 0.5);
    CHECK(f[c * 16 + 15] == 0.5);
  }
}

TEST_CASE("color_histogram_features: blocks are normalized") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 10; ++t) {
    const FeatureVector f = color_histogram_features(test::random_image(7, 5, rng));
    for (int c = 0; c < 3; ++c) CHECK(std::abs(f.segment(c * 16, 16).sum() - 1.0) <= 1e-9);
  }
}

TEST_CASE("kmeans: perfect fit and single cluster") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 5.0);
  Eigen::MatrixXd pts(9, 4);
  for (Eigen::Index i = 0; i < pts.size(); ++i) pts.data()[i] = n(rng);

  const ClusterModel full = kmeans(pts, 9, 1);
  CHECK(full.inertia == 0.0);
  std::set<std::size_t> used(full.assignments.begin(), full.assignments.end());
  CHECK(used.size() == 9);
  for (Eigen::Index i = 0; i < 9; ++i) {
    CHECK(full.centroids.row(static_cast<Eigen::Index>(full.assignments[static_cast<std::size_t>(i)])) == pts.row(i));
  }

  const ClusterModel one = kmeans(pts, 1, 1);
  CHECK((one.centroids.row(0) - pts.colwise().mean()).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("kmeans: three separated groups of four match the exhaustive oracle") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 3; ++t) {
    const Eigen::MatrixXd pts = separated_triples(rng);
    const ClusterModel m = kmeans(pts, 3, static_cast<std::uint64_t>(t));
    for (int i = 0; i < 12; ++i) CHECK(m.assignments[static_cast<std::size_t>(i)] == m.assignments[static_cast<std::size_t>(i / 4 * 4)]);
    CHECK(m.inertia == doctest::Approx(exhaustive_inertia(pts, 3)).epsilon(1e-9));
  }
}

TEST_CASE("kmeans: errors") {
  const Eigen::MatrixXd pts = Eigen::MatrixXd::Random(3, 2);
  CHECK_THROWS_AS(kmeans(pts, 4, 0), UsageError);
  CHECK_THROWS_AS(kmeans(pts, 0, 0), UsageError);
  Eigen::MatrixXd bad = pts;
  bad(1, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(kmeans(bad, 2, 0), DataError);
  bad(1, 1) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(kmeans(bad, 2, 0), DataError);
}

TEST_CASE("kmeans: invariants on random data") {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int t = 0; t < 20; ++t) {
    const Eigen::Index rows = 30 + t;
    Eigen::MatrixXd pts(rows, 3);
    for (Eigen::Index i = 0; i < pts.size(); ++i) pts.data()[i] = n(rng);
    const std::size_t k = 2 + static_cast<std::size_t>(t % 6);
    const ClusterModel m = kmeans(pts, k, static_cast<std::uint64_t>(t));

    for (std::size_t i = 1; i < m.inertia_history.size(); ++i) {
      CHECK(m.inertia_history[i] <= m.inertia_history[i - 1]);
    }
    const double recomputed = inertia_of(pts, m.centroids, m.assignments);
    CHECK(std::abs(recomputed - m.inertia) <= 1e-6 * std::max(1.0, recomputed));

    for (Eigen::Index i = 0; i < rows; ++i) {
      const std::size_t a = m.assignments[static_cast<std::size_t>(i)];
      CHECK(a < k);
      Eigen::Index best = 0;
      (m.centroids.rowwise() - pts.row(i)).rowwise().squaredNorm().minCoeff(&best);
      CHECK(static_cast<std::size_t>(best) == a);
    }

    std::vector<std::size_t> random_assignment(static_cast<std::size_t>(rows));
    Eigen::MatrixXd centroids = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k), 3);
    std::vector<double> counts(k, 0.0);
    for (std::size_t i = 0; i < random_assignment.size(); ++i) {
      random_assignment[i] = static_cast<std::size_t>(rng() % k);
      centroids.row(static_cast<Eigen::Index>(random_assignment[i])) += pts.row(static_cast<Eigen::Index>(i));
      counts[random_assignment[i]] += 1;
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] > 0) centroids.row(static_cast<Eigen::Index>(c)) /= counts[c];
    }
    CHECK(m.inertia <= inertia_of(pts, centroids, random_assignment));
  }
}

TEST_CASE("kmeans is reproducible for a fixed seed") {
  const Eigen::MatrixXd pts = Eigen::MatrixXd::Random(50, 5);
  const ClusterModel a = kmeans(pts, 6, 99);
  const ClusterModel b = kmeans(pts, 6, 99);
  CHECK(a.assignments == b.assignments);
  CHECK(a.centroids == b.centroids);
  CHECK(a.inertia == b.inertia);
}

TEST_CASE("cluster_dataset: identical features and k=1") {
  std::vector<FeatureVector> same(25, FeatureVector::Constant(48, 0.25));
  const ClusterModel m = cluster_dataset(same, 20, 0);
  CHECK(m.inertia == 0.0);
  for (std::size_t a : m.assignments) CHECK(a == 0);

  std::mt19937_64 rng(8);
  std::vector<FeatureVector> feats;
  for (int i = 0; i < 10; ++i) feats.push_back(color_histogram_features(test::random_image(4, 4, rng)));
  for (std::size_t a : cluster_dataset(feats, 1, 0).assignments) CHECK(a == 0);
}

TEST_CASE("cluster_dataset: red and blue images form pure clusters") {
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> jitter(0, 30);
  std::vector<FeatureVector> feats;
  for (int i = 0; i < 40; ++i) {
    const bool red = i % 2 == 0;
    RasterImage img(8, 8);
    for (RgbPixel& p : img.pixels()) {
      const auto hi = static_cast<std::uint8_t>(225 + jitter(rng));
      const auto lo = static_cast<std::uint8_t>(jitter(rng));
      p = red ? RgbPixel{hi, lo, lo} : RgbPixel{lo, lo, hi};
    }
    feats.push_back(color_histogram_features(img));
  }
  const ClusterModel m = cluster_dataset(feats, 2, 3);
  for (std::size_t i = 0; i < 40; ++i) CHECK(m.assignments[i] == m.assignments[i % 2]);
  CHECK(m.assignments[0] != m.assignments[1]);
}

TEST_CASE("DCQF: format fixture") {
  ByteWriter w;
  w.magic("DCQF");
  w.u8(1);
  w.u32(2);
  w.u32(3);
  for (float v : {1.f, 2.f, 3.f, 4.f, 5.f, 6.f}) w.f32(v);
  const Bytes bytes = w.take();
  const std::vector<FeatureVector> f = decode_features(bytes);
  REQUIRE(f.size() == 2);
  CHECK(f[0] == Eigen::Vector3d(1, 2, 3));
  CHECK(f[1] == Eigen::Vector3d(4, 5, 6));
  CHECK(encode_features(f) == bytes);
}

TEST_CASE("DCQF: parse errors") {
  const std::vector<FeatureVector> f{Eigen::Vector2d(1, 2), Eigen::Vector2d(3, 4)};
  Bytes bytes = encode_features(f);

  Bytes truncated(bytes.begin(), bytes.end() - 1);
  try {
    decode_features(truncated);
    FAIL("truncation accepted");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("16") != std::string::npos);
    CHECK(msg.find("15") != std::string::npos);
  }

  Bytes bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(decode_features(bad_magic), DataError);
  Bytes bad_version = bytes;
  bad_version[4] = 2;
  CHECK_THROWS_AS(decode_features(bad_version), DataError);
  Bytes trailing = bytes;
  trailing.push_back(0);
  CHECK_THROWS_AS(decode_features(trailing), DataError);

  Bytes nan = bytes;
  const float q = std::numeric_limits<float>::quiet_NaN();
  std::memcpy(nan.data() + 13 + 4, &q, 4);
  CHECK_THROWS_AS(decode_features(nan), DataError);
}

TEST_CASE("DCQF: write/load round trip on random tensors") {
  test::TempDir dir("dcqf");
  std::mt19937_64 rng(10);
  std::normal_distribution<float> n(0.f, 3.f);
  for (int t = 0; t < 10; ++t) {
    const int rows = 1 + t;
    const int dim = 1 + 3 * t;
    std::vector<FeatureVector> f(static_cast<std::size_t>(rows), FeatureVector(dim));
    for (auto& v : f) {
      for (int j = 0; j < dim; ++j) v[j] = static_cast<double>(n(rng));
    }
    write_features(dir / "f.dcqf", f);
    CHECK(load_features(dir / "f.dcqf") == f);
  }
  CHECK_THROWS_AS(load_features(dir / "missing.dcqf"), DataError);
}

TEST_CASE("kmeans restarts keep the best run") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int t = 0; t < 10; ++t) {
    Eigen::MatrixXd pts(60, 3);
    for (Eigen::Index i = 0; i < pts.size(); ++i) pts.data()[i] = n(rng);
    const ClusterModel single = kmeans(pts, 5, static_cast<std::uint64_t>(t), kDefaultMaxIterations, kDefaultTolerance, 1);
    const ClusterModel multi = kmeans(pts, 5, static_cast<std::uint64_t>(t), kDefaultMaxIterations, kDefaultTolerance, 6);
    CHECK(multi.inertia <= single.inertia);
    CHECK(multi.seed == single.seed);
  }
  CHECK_THROWS_AS(kmeans(Eigen::MatrixXd::Random(4, 2), 2, 0, 10, 1e-4, 0), UsageError);
}
