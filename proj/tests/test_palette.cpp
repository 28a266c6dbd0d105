#include <doctest.h>

#include <algorithm>
#include <cstring>
#include <limits>
#include <numeric>
#include <random>

#include "dcq/error.hpp"
#include "dcq/palette.hpp"
#include "dcq/refine.hpp"
#include "helpers.hpp"

using namespace dcq;

namespace {

AttentionMap uniform_attention(int h, int w, float v) { return AttentionMap(h, w, PlaneT<float>::Constant(h, w, v)); }

PixelSet random_pixels(Eigen::Index n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> l(0.0, 100.0);
  std::uniform_real_distribution<double> ab(-60.0, 60.0);
  PixelSet p(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) p.row(i) << l(rng), ab(rng), ab(rng);
  return p;
}

ClusterModel model_for(std::vector<std::size_t> assignments, std::size_t k) {
  ClusterModel m;
  m.k = k;
  m.assignments = std::move(assignments);
  m.centroids = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k), 1);
  return m;
}

double mean_quantization_error(const PixelSet& pixels, const Palette& pal) {
  double total = 0;
  for (Eigen::Index i = 0; i < pixels.rows(); ++i) {
    const LabPixel p = pixels.row(i).transpose();
    total += (pal.color(nearest_palette_index(p, pal)) - p).squaredNorm();
  }
  return total / static_cast<double>(pixels.rows());
}

}  // namespace

TEST_CASE("attention_selection_count") {
  CHECK(attention_selection_count(4, 0.5) == 2);
  CHECK(attention_selection_count(9, 1.0 / 3.0) == 3);
  CHECK(attention_selection_count(10, 0.3) == 3);
  CHECK(attention_selection_count(10, 0.31) == 4);
  CHECK(attention_selection_count(10, 0.01) == 1);
  CHECK(attention_selection_count(7, 1.0) == 7);
}

TEST_CASE("select_attention_pixels: full retention and tie order") {
  std::mt19937_64 rng(1);
  const LabImage img = to_lab(test::random_image(2, 2, rng));
  const PixelSet all = select_attention_pixels(img, uniform_attention(2, 2, 0.3f), 1.0);
  CHECK(all == img.pixels());
  const PixelSet half = select_attention_pixels(img, uniform_attention(2, 2, 0.3f), 0.5);
  REQUIRE(half.rows() == 2);
  CHECK(half == img.pixels().topRows(2));
}

TEST_CASE("select_attention_pixels: top positions of a distinct 3x3 map") {
  std::mt19937_64 rng(2);
  const LabImage img = to_lab(test::random_image(3, 3, rng));
  std::vector<float> values{0.1f, 0.9f, 0.3f, 0.7f, 0.2f, 0.8f, 0.0f, 0.4f, 0.5f};
  std::shuffle(values.begin(), values.end(), rng);
  PlaneT<float> att(3, 3);
  std::copy(values.begin(), values.end(), att.data());

  std::vector<int> order(9);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return values[a] > values[b]; });
  std::vector<int> top(order.begin(), order.begin() + 3);
  std::sort(top.begin(), top.end());

  const PixelSet sel = select_attention_pixels(img, AttentionMap(3, 3, att), 1.0 / 3.0);
  REQUIRE(sel.rows() == 3);
  for (int i = 0; i < 3; ++i) CHECK(sel.row(i) == img.pixels().row(top[static_cast<std::size_t>(i)]));
}

TEST_CASE("select_attention_pixels: count property and shape mismatch") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<float> u(0.f, 1.f);
  for (int t = 0; t < 20; ++t) {
    const int h = 1 + t % 5;
    const int w = 2 + t % 7;
    const LabImage img = to_lab(test::random_image(h, w, rng));
    PlaneT<float> att(h, w);
    for (Eigen::Index i = 0; i < att.size(); ++i) att.data()[i] = u(rng);
    const double k_gra = 0.05 + 0.05 * t;
    const auto expected = static_cast<Eigen::Index>(std::ceil(k_gra * h * w - 1e-9));
    CHECK(select_attention_pixels(img, AttentionMap(h, w, att), k_gra).rows() == std::max<Eigen::Index>(1, expected));
  }
  const LabImage img(2, 3);
  CHECK_THROWS_AS(select_attention_pixels(img, uniform_attention(3, 2, 0.5f), 0.5), UsageError);
}

TEST_CASE("AttentionMap rejects values outside [0, 1]") {
  CHECK_THROWS_AS(uniform_attention(2, 2, 1.5f), DataError);
  CHECK_THROWS_AS(uniform_attention(2, 2, -0.1f), DataError);
}

TEST_CASE("build_cluster_palette: two colors at q=1") {
  PixelSet p(10, 3);
  for (int i = 0; i < 10; ++i) {
    p.row(i) = i < 7 ? Eigen::RowVector3d(30, 10, -5) : Eigen::RowVector3d(70, -20, 40);
  }
  const Palette pal = build_cluster_palette(p, 1, 0);
  REQUIRE(pal.size() == 2);
  CHECK(pal.color(0) == Eigen::Vector3d(30, 10, -5));
  CHECK(pal.color(1) == Eigen::Vector3d(70, -20, 40));
  CHECK_FALSE(pal.has_duplicates());
}

TEST_CASE("build_cluster_palette: identical pixels pad with duplicates") {
  const PixelSet p = PixelSet::Constant(9, 3, 12.5);
  const Palette pal = build_cluster_palette(p, 2, 0);
  REQUIRE(pal.size() == 4);
  CHECK(pal.has_duplicates());
  for (int i = 0; i < 4; ++i) CHECK(pal.color(i) == Eigen::Vector3d::Constant(12.5));
  CHECK_THROWS_AS(build_cluster_palette(PixelSet(0, 3), 1, 0), UsageError);
}

TEST_CASE("build_cluster_palette equals subsample then kmeans") {
  std::mt19937_64 rng(4);
  const PixelSet pixels = random_pixels(1000, rng);
  const std::uint64_t seed = 77;
  const Palette pal = build_cluster_palette(pixels, 2, seed, 100);

  const PixelSet sub = subsample_pixels(pixels, 100, seed);
  CHECK(sub.rows() == 100);
  const ClusterModel m = kmeans(sub, 4, seed);
  const std::vector<std::size_t> sizes = m.cluster_sizes();
  std::vector<int> order{0, 1, 2, 3};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (sizes[static_cast<std::size_t>(a)] != sizes[static_cast<std::size_t>(b)]) {
      return sizes[static_cast<std::size_t>(a)] > sizes[static_cast<std::size_t>(b)];
    }
    return m.centroids(a, 0) < m.centroids(b, 0);
  });
  for (int i = 0; i < 4; ++i) CHECK(pal.color(i) == m.centroids.row(order[static_cast<std::size_t>(i)]).transpose());
}

TEST_CASE("subsample_pixels keeps order and is seeded") {
  std::mt19937_64 rng(5);
  PixelSet pixels = random_pixels(50, rng);
  for (Eigen::Index i = 0; i < 50; ++i) pixels(i, 0) = static_cast<double>(i);
  const PixelSet a = subsample_pixels(pixels, 20, 9);
  CHECK(a == subsample_pixels(pixels, 20, 9));
  CHECK(a != subsample_pixels(pixels, 20, 10));
  for (Eigen::Index i = 1; i < a.rows(); ++i) CHECK(a(i, 0) > a(i - 1, 0));
  CHECK(subsample_pixels(pixels, 80, 9) == pixels);
}

TEST_CASE("quantization error is non-increasing in q on the training pixels") {
  std::mt19937_64 rng(6);
  const PixelSet pixels = random_pixels(400, rng);
  double prev = std::numeric_limits<double>::infinity();
  for (int q = 1; q <= 5; ++q) {
    const double err = mean_quantization_error(pixels, build_cluster_palette(pixels, q, 3));
    CHECK(err <= prev + 1e-9);
    prev = err;
  }
}

TEST_CASE("build_all_palettes: single solid red image") {
  const std::vector<LabImage> images{to_lab(RasterImage(4, 4, RgbPixel{255, 0, 0}))};
  const ClusterPalettes cp = build_all_palettes(images, model_for({0}, 1), {}, 1);
  REQUIRE(cp.palettes.size() == 1);
  CHECK(cp.q == 1);
  const LabPixel red = srgb_to_lab(RgbPixel{255, 0, 0});
  for (int i = 0; i < 2; ++i) CHECK((cp.palettes[0].color(i) - red).norm() < 1e-9);
}

TEST_CASE("build_all_palettes: red and blue clusters stay apart") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> jitter(0, 40);
  std::vector<LabImage> images;
  std::vector<std::size_t> assign;
  for (int i = 0; i < 6; ++i) {
    RasterImage img(6, 6);
    for (RgbPixel& p : img.pixels()) {
      const auto hi = static_cast<std::uint8_t>(215 + jitter(rng));
      const auto lo = static_cast<std::uint8_t>(jitter(rng));
      p = i % 2 == 0 ? RgbPixel{hi, lo, lo} : RgbPixel{lo, lo, hi};
    }
    images.push_back(to_lab(img));
    assign.push_back(static_cast<std::size_t>(i % 2));
  }
  const ClusterPalettes cp = build_all_palettes(images, model_for(assign, 2), {}, 1);
  const LabPixel red = srgb_to_lab(RgbPixel{255, 0, 0});
  const LabPixel blue = srgb_to_lab(RgbPixel{0, 0, 255});
  for (int i = 0; i < 2; ++i) {
    CHECK((cp.palettes[0].color(i) - red).norm() < (cp.palettes[0].color(i) - blue).norm());
    CHECK((cp.palettes[1].color(i) - blue).norm() < (cp.palettes[1].color(i) - red).norm());
  }
}

TEST_CASE("build_all_palettes: attention pulls the foreground color in") {
  // Small red square on a large gray background.
  RasterImage img(10, 10, RgbPixel{128, 128, 128});
  PlaneT<float> att = PlaneT<float>::Constant(10, 10, 0.1f);
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> shade(-6, 6);
  for (int y = 0; y < 10; ++y) {
    for (int x = 0; x < 10; ++x) {
      const auto g = static_cast<std::uint8_t>(128 + shade(rng));
      img.at(y, x) = {g, g, g};
    }
  }
  for (int y = 3; y < 6; ++y) {
    for (int x = 3; x < 6; ++x) {
      img.at(y, x) = {230, 20, 20};
      att(y, x) = 1.0f;
    }
  }
  const std::vector<LabImage> images{to_lab(img)};
  const std::vector<AttentionMap> maps{AttentionMap(10, 10, att)};
  const ClusterPalettes cp = build_all_palettes(images, model_for({0}, 1), maps, 1, 0.5);
  const LabPixel red = srgb_to_lab(RgbPixel{230, 20, 20});
  const LabPixel gray = srgb_to_lab(RgbPixel{128, 128, 128});
  bool has_red = false;
  for (int i = 0; i < 2; ++i) {
    has_red = has_red || (cp.palettes[0].color(i) - red).norm() < (cp.palettes[0].color(i) - gray).norm();
  }
  CHECK(has_red);
}

TEST_CASE("build_all_palettes: empty cluster and thread independence") {
  std::mt19937_64 rng(9);
  std::vector<LabImage> images;
  for (int i = 0; i < 8; ++i) images.push_back(to_lab(test::random_image(5, 5, rng)));
  try {
    build_all_palettes(images, model_for({0, 0, 2, 2, 0, 2, 0, 0}, 3), {}, 2);
    FAIL("empty cluster accepted");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("cluster 1") != std::string::npos);
  }
  const ClusterModel m = model_for({0, 1, 2, 1, 0, 2, 0, 1}, 3);
  const ClusterPalettes a = build_all_palettes(images, m, {}, 2, 0.5, 5, kDefaultPixelCap, 1);
  const ClusterPalettes b = build_all_palettes(images, m, {}, 2, 0.5, 5, kDefaultPixelCap, 4);
  for (std::size_t c = 0; c < 3; ++c) CHECK(a.palettes[c].colors() == b.palettes[c].colors());
}

TEST_CASE("DCQA round trip and validation") {
  test::TempDir dir("dcqa");
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<float> u(0.f, 1.f);
  std::vector<AttentionMap> maps;
  for (int i = 0; i < 3; ++i) {
    PlaneT<float> v(4, 5);
    for (Eigen::Index j = 0; j < v.size(); ++j) v.data()[j] = u(rng);
    maps.emplace_back(4, 5, v);
  }
  write_attention(dir / "a.dcqa", maps);
  const std::vector<AttentionMap> back = load_attention(dir / "a.dcqa");
  REQUIRE(back.size() == 3);
  for (int i = 0; i < 3; ++i) CHECK((back[static_cast<std::size_t>(i)].values() == maps[static_cast<std::size_t>(i)].values()).all());

  Bytes bytes = encode_attention(maps);
  CHECK(bytes.size() == 4 + 1 + 4 + 2 + 2 + 3 * 4 * 5 * 4);
  const float over = 2.0f;
  std::memcpy(bytes.data() + 13, &over, 4);
  CHECK_THROWS_AS(decode_attention(bytes), DataError);
  bytes.pop_back();
  CHECK_THROWS_AS(decode_attention(bytes), DataError);
}
