#include "dcq/palette.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>

#include "dcq/error.hpp"
#include "dcq/parallel.hpp"
#include "dcq/random.hpp"

namespace dcq {

namespace {

constexpr std::uint8_t kAttentionVersion = 1;
constexpr std::uint64_t kPaletteStream = 0x50414c;  // "PAL"

struct Entry {
  Eigen::RowVector3d color;
  std::size_t population;
  std::size_t order;
};

// Descending population, then ascending L, a, b, then original position.
void sort_entries(std::vector<Entry>& entries) {
  std::sort(entries.begin(), entries.end(), [](const Entry& x, const Entry& y) {
    if (x.population != y.population) return x.population > y.population;
    for (int c = 0; c < 3; ++c) {
      if (x.color[c] != y.color[c]) return x.color[c] < y.color[c];
    }
    return x.order < y.order;
  });
}

void check_bits(int q) {
  if (q < 1 || q > 8) throw UsageError("bit depth q must be in [1, 8], got " + std::to_string(q));
}

}  // namespace

AttentionMap::AttentionMap(int height, int width, PlaneT<float> values) : values_(std::move(values)) {
  if (height < 1 || width < 1) throw UsageError("attention map dimensions must be positive");
  if (values_.rows() != height || values_.cols() != width) throw UsageError("attention map buffer does not match its shape");
  for (Eigen::Index i = 0; i < values_.size(); ++i) {
    const float v = values_.data()[i];
    if (!(v >= 0.0f && v <= 1.0f)) {
      throw DataError("attention value " + std::to_string(v) + " at pixel " + std::to_string(i) + " is outside [0, 1]");
    }
  }
}

std::size_t attention_selection_count(std::size_t n, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw UsageError("attention fraction must be in (0, 1], got " + std::to_string(fraction));
  }
  const double x = fraction * static_cast<double>(n);
  const double nearest = std::round(x);
  double count = std::abs(x - nearest) <= 1e-9 * std::max(1.0, x) ? nearest : std::ceil(x);
  count = std::clamp(count, 1.0, static_cast<double>(n));
  return static_cast<std::size_t>(count);
}

PixelSet select_attention_pixels(const LabImage& img, const AttentionMap& att, double k_gra) {
  if (att.height() != img.height() || att.width() != img.width()) {
    throw UsageError("attention map is " + std::to_string(att.height()) + "x" + std::to_string(att.width()) +
                     " but image is " + std::to_string(img.height()) + "x" + std::to_string(img.width()));
  }
  const auto n = static_cast<std::size_t>(img.size());
  const std::size_t count = attention_selection_count(n, k_gra);
  const float* v = att.values().data();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [v](std::size_t a, std::size_t b) { return v[a] > v[b]; });
  order.resize(count);
  std::sort(order.begin(), order.end());
  PixelSet out(static_cast<Eigen::Index>(count), 3);
  for (std::size_t i = 0; i < count; ++i) out.row(static_cast<Eigen::Index>(i)) = img.pixels().row(static_cast<Eigen::Index>(order[i]));
  return out;
}

PixelSet subsample_pixels(const PixelSet& pixels, std::size_t cap, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(pixels.rows());
  if (cap == 0) throw UsageError("pixel subsample cap must be positive");
  if (n <= cap) return pixels;
  Rng rng(seed);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < cap; ++i) std::swap(idx[i], idx[i + rng.index(n - i)]);
  idx.resize(cap);
  std::sort(idx.begin(), idx.end());
  PixelSet out(static_cast<Eigen::Index>(cap), 3);
  for (std::size_t i = 0; i < cap; ++i) out.row(static_cast<Eigen::Index>(i)) = pixels.row(static_cast<Eigen::Index>(idx[i]));
  return out;
}

Palette build_cluster_palette(const PixelSet& pixels, int q, std::uint64_t seed, std::size_t cap) {
  check_bits(q);
  if (pixels.rows() == 0) throw UsageError("cannot build a palette from zero pixels");
  const std::size_t k = std::size_t{1} << q;
  const PixelSet sample = subsample_pixels(pixels, cap, seed);

  std::map<std::array<double, 3>, std::size_t> distinct;
  for (Eigen::Index i = 0; i < sample.rows() && distinct.size() <= k; ++i) {
    ++distinct[{sample(i, 0), sample(i, 1), sample(i, 2)}];
  }

  std::vector<Entry> entries;
  if (distinct.size() < k) {
    // Every pixel was counted since the loop only stops early past k colors.
    for (const auto& [c, count] : distinct) {
      entries.push_back({Eigen::RowVector3d(c[0], c[1], c[2]), count, entries.size()});
    }
  } else {
    const ClusterModel model = kmeans(sample, k, seed);
    const std::vector<std::size_t> sizes = model.cluster_sizes();
    for (std::size_t c = 0; c < k; ++c) {
      entries.push_back({model.centroids.row(static_cast<Eigen::Index>(c)), sizes[c], c});
    }
  }
  sort_entries(entries);

  Palette::Colors colors(static_cast<Eigen::Index>(k), 3);
  for (std::size_t i = 0; i < k; ++i) colors.row(static_cast<Eigen::Index>(i)) = entries[i % entries.size()].color;
  return Palette(std::move(colors));
}

std::uint64_t palette_seed(std::uint64_t seed, std::size_t cluster) {
  return derive_seed(seed, kPaletteStream, cluster);
}

ClusterPalettes build_all_palettes(std::span<const LabImage> images, const ClusterModel& model,
                                   std::span<const AttentionMap> attention, int q, double k_gra, std::uint64_t seed,
                                   std::size_t cap, int threads) {
  check_bits(q);
  if (model.assignments.size() != images.size()) {
    throw UsageError("cluster model covers " + std::to_string(model.assignments.size()) + " images, dataset has " +
                     std::to_string(images.size()));
  }
  if (!attention.empty() && attention.size() != images.size()) {
    throw UsageError("got " + std::to_string(attention.size()) + " attention maps for " +
                     std::to_string(images.size()) + " images");
  }
  if (!attention.empty()) attention_selection_count(1, k_gra);

  std::vector<std::vector<std::size_t>> members(model.k);
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (model.assignments[i] >= model.k) throw InvariantError("image " + std::to_string(i) + " has an out-of-range cluster id");
    members[model.assignments[i]].push_back(i);
  }
  for (std::size_t c = 0; c < model.k; ++c) {
    if (members[c].empty()) throw DataError("cluster " + std::to_string(c) + " has no member images");
  }

  ClusterPalettes out;
  out.q = q;
  out.palettes.resize(model.k);
  parallel_for(model.k, threads, [&](std::size_t c) {
    std::vector<PixelSet> parts;
    Eigen::Index total = 0;
    for (std::size_t i : members[c]) {
      if (attention.empty()) {
        parts.push_back(images[i].pixels());
      } else {
        parts.push_back(select_attention_pixels(images[i], attention[i], k_gra));
      }
      total += parts.back().rows();
    }
    PixelSet pool(total, 3);
    Eigen::Index row = 0;
    for (const PixelSet& p : parts) {
      pool.middleRows(row, p.rows()) = p;
      row += p.rows();
    }
    out.palettes[c] = build_cluster_palette(pool, q, palette_seed(seed, c), cap);
  });
  return out;
}

Bytes encode_attention(std::span<const AttentionMap> maps) {
  if (maps.empty()) throw UsageError("DCQA: no attention maps to write");
  const int h = maps.front().height();
  const int w = maps.front().width();
  if (h > 0xFFFF || w > 0xFFFF) throw UsageError("DCQA: attention maps larger than 65535 pixels per side");
  ByteWriter out;
  out.magic("DCQA");
  out.u8(kAttentionVersion);
  out.u32(static_cast<std::uint32_t>(maps.size()));
  out.u16(static_cast<std::uint16_t>(h));
  out.u16(static_cast<std::uint16_t>(w));
  for (const AttentionMap& m : maps) {
    if (m.height() != h || m.width() != w) throw UsageError("DCQA: attention maps differ in shape");
    for (Eigen::Index i = 0; i < m.values().size(); ++i) out.f32(m.values().data()[i]);
  }
  return out.take();
}

std::vector<AttentionMap> decode_attention(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, "DCQA");
  r.expect_magic("DCQA");
  const std::uint8_t version = r.u8();
  if (version != kAttentionVersion) r.fail("unsupported version " + std::to_string(version));
  const std::uint32_t n = r.u32();
  const std::uint16_t h = r.u16();
  const std::uint16_t w = r.u16();
  if (h == 0 || w == 0) r.fail("zero attention map dimension");
  r.expect_remaining(std::size_t{n} * h * w * 4, "attention payload");
  std::vector<AttentionMap> maps;
  maps.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    PlaneT<float> values(h, w);
    for (Eigen::Index j = 0; j < values.size(); ++j) {
      const float v = r.f32();
      if (!(v >= 0.0f && v <= 1.0f)) {
        r.fail("attention value " + std::to_string(v) + " of image " + std::to_string(i) + " is outside [0, 1]");
      }
      values.data()[j] = v;
    }
    maps.emplace_back(h, w, std::move(values));
  }
  return maps;
}

void write_attention(const std::filesystem::path& path, std::span<const AttentionMap> maps) {
  write_file(path, encode_attention(maps));
}

std::vector<AttentionMap> load_attention(const std::filesystem::path& path) {
  return decode_attention(read_file(path));
}

}  // namespace dcq
