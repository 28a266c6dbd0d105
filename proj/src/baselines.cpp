#include "dcq/baselines.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <queue>
#include <tuple>

#include "dcq/error.hpp"
#include "dcq/palette.hpp"
#include "dcq/refine.hpp"

namespace dcq {

namespace {

using Rgb = std::array<std::uint8_t, 3>;

void check_bits(int q) {
  if (q < 1 || q > 8) throw UsageError("bit depth q must be in [1, 8], got " + std::to_string(q));
}

struct MeanColor {
  Eigen::Vector3d rgb;
  std::size_t population;
};

// Pads to 2^q entries by cycling, converts to LAB and assigns every pixel.
BaselineResult finish(const std::vector<MeanColor>& means, int q, const LabImage& lab) {
  const std::size_t k = std::size_t{1} << q;
  Palette::Colors colors(static_cast<Eigen::Index>(k), 3);
  BaselineResult out;
  out.populations.assign(k, 0);
  for (std::size_t i = 0; i < k; ++i) {
    const MeanColor& m = means[i % means.size()];
    colors.row(static_cast<Eigen::Index>(i)) = srgb_to_lab(m.rgb).transpose();
    if (i < means.size()) out.populations[i] = m.population;
  }
  out.palette = Palette(std::move(colors));
  out.indices = quantize_hard(lab, out.palette).indices;
  return out;
}

std::vector<Rgb> pixels_of(const RasterImage& img) {
  std::vector<Rgb> px;
  px.reserve(img.size());
  for (const RgbPixel& p : img.pixels()) px.push_back({p.r, p.g, p.b});
  return px;
}

// Largest side length of a box and the axis it lies on (first axis on ties).
std::pair<int, int> longest_side(const std::vector<Rgb>& box) {
  std::array<int, 3> lo{255, 255, 255};
  std::array<int, 3> hi{0, 0, 0};
  for (const Rgb& p : box) {
    for (int c = 0; c < 3; ++c) {
      lo[c] = std::min<int>(lo[c], p[c]);
      hi[c] = std::max<int>(hi[c], p[c]);
    }
  }
  int axis = 0;
  for (int c = 1; c < 3; ++c) {
    if (hi[c] - lo[c] > hi[axis] - lo[axis]) axis = c;
  }
  return {hi[axis] - lo[axis], axis};
}

struct OctreeNode {
  int depth = 0;
  std::uint32_t code = 0;
  std::array<int, 8> children{-1, -1, -1, -1, -1, -1, -1, -1};
  int parent = -1;
  bool leaf = false;
  std::size_t count = 0;
  std::array<double, 3> sum{0.0, 0.0, 0.0};
};

}  // namespace

BaselineKind parse_baseline_kind(std::string_view name) {
  if (name == "kmeans") return BaselineKind::PerImageKMeans;
  if (name == "mediancut") return BaselineKind::MedianCut;
  if (name == "octree") return BaselineKind::Octree;
  throw UsageError("unknown baseline method '" + std::string(name) + "' (expected kmeans, mediancut or octree)");
}

std::string_view baseline_name(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::PerImageKMeans:
      return "kmeans";
    case BaselineKind::MedianCut:
      return "mediancut";
    case BaselineKind::Octree:
      return "octree";
  }
  return "unknown";
}

BaselineResult per_image_kmeans(const RasterImage& img, int q, std::uint64_t seed) {
  check_bits(q);
  const LabImage lab = to_lab(img);
  BaselineResult out;
  out.palette = build_cluster_palette(lab.pixels(), q, seed, std::numeric_limits<std::size_t>::max());
  out.indices = quantize_hard(lab, out.palette).indices;
  out.populations.assign(static_cast<std::size_t>(out.palette.size()), 0);
  for (std::uint8_t i : out.indices) ++out.populations[i];
  return out;
}

BaselineResult median_cut(const RasterImage& img, int q) {
  check_bits(q);
  const std::size_t k = std::size_t{1} << q;
  std::vector<std::vector<Rgb>> boxes{pixels_of(img)};

  while (boxes.size() < k) {
    std::size_t best = boxes.size();
    int best_extent = 0;
    int best_axis = 0;
    for (std::size_t i = 0; i < boxes.size(); ++i) {
      const auto [extent, axis] = longest_side(boxes[i]);
      if (extent > best_extent) {
        best = i;
        best_extent = extent;
        best_axis = axis;
      }
    }
    if (best == boxes.size()) break;

    std::vector<Rgb>& box = boxes[best];
    const int axis = best_axis;
    std::vector<std::uint8_t> values;
    values.reserve(box.size());
    for (const Rgb& p : box) values.push_back(p[axis]);
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(values.size() / 2), values.end());
    const std::uint8_t median = values[values.size() / 2];
    auto split = std::stable_partition(box.begin(), box.end(), [&](const Rgb& p) { return p[axis] < median; });
    if (split == box.begin()) {
      split = std::stable_partition(box.begin(), box.end(), [&](const Rgb& p) { return p[axis] <= median; });
    }
    std::vector<Rgb> right(split, box.end());
    box.erase(split, box.end());
    boxes.push_back(std::move(right));
  }

  std::vector<MeanColor> means;
  for (const auto& box : boxes) {
    Eigen::Vector3d sum = Eigen::Vector3d::Zero();
    for (const Rgb& p : box) sum += Eigen::Vector3d(p[0], p[1], p[2]);
    means.push_back({sum / static_cast<double>(box.size()), box.size()});
  }
  return finish(means, q, to_lab(img));
}

BaselineResult octree_quantize(const RasterImage& img, int q) {
  check_bits(q);
  const std::size_t k = std::size_t{1} << q;
  std::vector<OctreeNode> nodes(1);
  std::size_t leaves = 0;

  for (const RgbPixel& p : img.pixels()) {
    int node = 0;
    for (int level = 0;; ++level) {
      OctreeNode& n = nodes[static_cast<std::size_t>(node)];
      ++n.count;
      n.sum[0] += p.r;
      n.sum[1] += p.g;
      n.sum[2] += p.b;
      if (level == 8) {
        n.leaf = true;
        break;
      }
      const int bit = 7 - level;
      const int child = (((p.r >> bit) & 1) << 2) | (((p.g >> bit) & 1) << 1) | ((p.b >> bit) & 1);
      int next = n.children[static_cast<std::size_t>(child)];
      if (next < 0) {
        OctreeNode c;
        c.depth = level + 1;
        c.code = (n.code << 3) | static_cast<std::uint32_t>(child);
        c.parent = node;
        next = static_cast<int>(nodes.size());
        nodes[static_cast<std::size_t>(node)].children[static_cast<std::size_t>(child)] = next;
        nodes.push_back(c);
        if (level + 1 == 8) ++leaves;
      }
      node = next;
    }
  }

  auto reducible = [&](int id) {
    const OctreeNode& n = nodes[static_cast<std::size_t>(id)];
    if (n.leaf) return false;
    for (int c : n.children) {
      if (c >= 0 && !nodes[static_cast<std::size_t>(c)].leaf) return false;
    }
    return true;
  };
  // Deepest first, then least populated, then lowest Morton code.
  using Key = std::tuple<int, std::size_t, std::uint32_t, int>;
  std::priority_queue<Key, std::vector<Key>, std::greater<>> queue;
  auto push = [&](int id) {
    const OctreeNode& n = nodes[static_cast<std::size_t>(id)];
    queue.emplace(-n.depth, n.count, n.code, id);
  };
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (reducible(static_cast<int>(i))) push(static_cast<int>(i));
  }
  while (leaves > k && !queue.empty()) {
    const int id = std::get<3>(queue.top());
    queue.pop();
    OctreeNode& n = nodes[static_cast<std::size_t>(id)];
    std::size_t merged = 0;
    for (int& c : n.children) {
      if (c >= 0) ++merged;
      c = -1;
    }
    n.leaf = true;
    leaves -= merged - 1;
    if (n.parent >= 0 && reducible(n.parent)) push(n.parent);
  }

  std::vector<MeanColor> means;
  std::vector<int> stack{0};
  while (!stack.empty()) {
    const int id = stack.back();
    stack.pop_back();
    const OctreeNode& n = nodes[static_cast<std::size_t>(id)];
    if (n.leaf) {
      means.push_back({Eigen::Vector3d(n.sum[0], n.sum[1], n.sum[2]) / static_cast<double>(n.count), n.count});
      continue;
    }
    for (int c = 7; c >= 0; --c) {
      if (n.children[static_cast<std::size_t>(c)] >= 0) stack.push_back(n.children[static_cast<std::size_t>(c)]);
    }
  }
  return finish(means, q, to_lab(img));
}

BaselineResult run_baseline(BaselineKind kind, const RasterImage& img, int q, std::uint64_t seed) {
  switch (kind) {
    case BaselineKind::PerImageKMeans:
      return per_image_kmeans(img, q, seed);
    case BaselineKind::MedianCut:
      return median_cut(img, q);
    case BaselineKind::Octree:
      return octree_quantize(img, q);
  }
  throw UsageError("unknown baseline");
}

}  // namespace dcq
