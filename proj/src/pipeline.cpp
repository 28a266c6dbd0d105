#include "dcq/pipeline.hpp"

#include <json.hpp>

#include <algorithm>
#include <numeric>
#include <sstream>
#include <system_error>
#include <utility>

#include "dcq/error.hpp"
#include "dcq/features.hpp"
#include "dcq/parallel.hpp"
#include "dcq/png_io.hpp"
#include "dcq/random.hpp"

namespace dcq {

namespace {

using nlohmann::json;

constexpr std::uint64_t kRefineStream = 0x524546;    // "REF"
constexpr std::uint64_t kBaselineStream = 0x424153;  // "BAS"

// Re-raises any failure of `fn` with the stage name in front, preserving the error category.
template <typename Fn>
auto in_stage(const std::string& stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const UsageError& e) {
    throw UsageError(stage + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(stage + ": " + e.what());
  } catch (const InvariantError& e) {
    throw InvariantError(stage + ": " + e.what());
  } catch (const nlohmann::json::exception& e) {
    throw DataError(stage + ": " + e.what());
  } catch (const std::exception& e) {
    throw InvariantError(stage + ": " + e.what());
  }
}

void require_file(const std::filesystem::path& path, const std::string& artifact) {
  if (path.empty()) throw UsageError("no path given for the " + artifact);
  if (!std::filesystem::exists(path)) {
    throw DataError("missing " + artifact + " '" + path.string() + "'");
  }
}

// Stages several outputs next to their targets and moves them into place together.
class OutputTransaction {
 public:
  OutputTransaction() = default;
  OutputTransaction(const OutputTransaction&) = delete;
  OutputTransaction& operator=(const OutputTransaction&) = delete;

  ~OutputTransaction() {
    std::error_code ec;
    for (const auto& [partial, target] : staged_) std::filesystem::remove(partial, ec);
    if (!committed_) {
      for (const auto& target : moved_) std::filesystem::remove(target, ec);
    }
  }

  void stage(const std::filesystem::path& target, std::span<const std::uint8_t> data) {
    std::filesystem::path partial = target;
    partial += ".partial";
    write_file(partial, data);
    staged_.emplace_back(partial, target);
  }

  void commit() {
    for (const auto& [partial, target] : staged_) {
      std::error_code ec;
      std::filesystem::rename(partial, target, ec);
      if (ec) throw DataError("cannot move output into place at " + target.string());
      moved_.push_back(target);
    }
    staged_.clear();
    committed_ = true;
  }

 private:
  std::vector<std::pair<std::filesystem::path, std::filesystem::path>> staged_;
  std::vector<std::filesystem::path> moved_;
  bool committed_ = false;
};

std::span<const std::uint8_t> as_bytes(const std::string& s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}


}  // namespace

void PipelineConfig::validate() const {
  if (q < 1 || q > 8) throw UsageError("--bits must be in [1, 8], got " + std::to_string(q));
  if (k < 1) throw UsageError("--clusters must be >= 1");
  if (!(k_gra > 0.0 && k_gra <= 1.0)) throw UsageError("--kgra must be in (0, 1]");
  if (threads < 1) throw UsageError("--threads must be >= 1");
  if (pixel_cap < 1) throw UsageError("pixel cap must be >= 1");
  if (method != "dcq") parse_baseline_kind(method);
  refine_config.validate();
}

std::filesystem::path PipelineConfig::report_path() const {
  if (!report.empty()) return report;
  std::filesystem::path p = out;
  p += ".csv";
  return p;
}

ImageSet load_image_set(const std::filesystem::path& input, const std::filesystem::path& labels) {
  require_file(input, "input images");
  ImageSet set;
  set.images = std::filesystem::is_directory(input) ? load_png_directory(input) : load_images(input);
  if (!labels.empty()) {
    require_file(labels, "label manifest");
    set.labels = load_labels(labels);
    if (set.labels.size() != set.images.size()) {
      throw DataError("label manifest has " + std::to_string(set.labels.size()) + " entries for " +
                      std::to_string(set.images.size()) + " images");
    }
  }
  return set;
}

std::vector<FeatureVector> load_feature_source(const std::string& source, std::span<const RasterImage> images) {
  if (source == "histogram") {
    std::vector<FeatureVector> features;
    features.reserve(images.size());
    for (const RasterImage& img : images) features.push_back(color_histogram_features(img));
    return features;
  }
  require_file(source, "feature file");
  std::vector<FeatureVector> features = load_features(source);
  if (features.size() != images.size()) {
    throw DataError("feature file " + source + " has " + std::to_string(features.size()) + " rows for " +
                    std::to_string(images.size()) + " images");
  }
  return features;
}

std::vector<AttentionMap> load_attention_source(const std::string& source, std::span<const RasterImage> images) {
  if (source == "none") return {};
  require_file(source, "attention file");
  std::vector<AttentionMap> maps = load_attention(source);
  if (maps.size() != images.size()) {
    throw DataError("attention file " + source + " has " + std::to_string(maps.size()) + " maps for " +
                    std::to_string(images.size()) + " images");
  }
  if (!maps.empty() && (maps.front().height() != images.front().height() ||
                        maps.front().width() != images.front().width())) {
    throw DataError("attention maps are " + std::to_string(maps.front().height()) + "x" +
                    std::to_string(maps.front().width()) + " but images are " +
                    std::to_string(images.front().height()) + "x" + std::to_string(images.front().width()));
  }
  return maps;
}

std::vector<LabImage> to_lab_images(std::span<const RasterImage> images, int threads) {
  std::vector<std::optional<LabImage>> slots(images.size());
  parallel_for(images.size(), threads, [&](std::size_t i) { slots[i].emplace(to_lab(images[i])); });
  std::vector<LabImage> out;
  out.reserve(images.size());
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

ClusterModel cluster_images(std::span<const FeatureVector> features, std::size_t k, std::uint64_t seed) {
  ClusterModel model = cluster_dataset(features, k, seed);
  const std::vector<std::size_t> sizes = model.cluster_sizes();
  std::vector<std::size_t> remap(model.k, 0);
  std::vector<Eigen::Index> kept;
  for (std::size_t c = 0; c < model.k; ++c) {
    if (sizes[c] == 0) continue;
    remap[c] = kept.size();
    kept.push_back(static_cast<Eigen::Index>(c));
  }
  if (kept.size() == model.k) return model;
  Eigen::MatrixXd centroids(static_cast<Eigen::Index>(kept.size()), model.centroids.cols());
  for (std::size_t i = 0; i < kept.size(); ++i) centroids.row(static_cast<Eigen::Index>(i)) = model.centroids.row(kept[i]);
  for (std::size_t& a : model.assignments) a = remap[a];
  model.centroids = std::move(centroids);
  model.k = kept.size();
  return model;
}

std::uint64_t refine_seed(std::uint64_t seed, std::size_t cluster) { return derive_seed(seed, kRefineStream, cluster); }

ClusterPalettes refine_cluster_palettes(std::span<const LabImage> images, const ClusterModel& model,
                                        const ClusterPalettes& palettes, const RefineConfig& cfg, int threads) {
  cfg.validate();
  if (palettes.palettes.size() != model.k) throw UsageError("palette count does not match the cluster count");
  if (model.assignments.size() != images.size()) throw UsageError("cluster model does not match the image count");
  std::vector<std::vector<std::size_t>> members(model.k);
  for (std::size_t i = 0; i < images.size(); ++i) members[model.assignments[i]].push_back(i);

  ClusterPalettes out = palettes;
  parallel_for(model.k, threads, [&](std::size_t c) {
    std::vector<std::size_t> chosen = members[c];
    if (chosen.empty()) return;
    const auto cap = static_cast<std::size_t>(cfg.sample_images);
    if (chosen.size() > cap) {
      Rng rng(refine_seed(cfg.seed, c));
      for (std::size_t i = 0; i < cap; ++i) std::swap(chosen[i], chosen[i + rng.index(chosen.size() - i)]);
      chosen.resize(cap);
      std::sort(chosen.begin(), chosen.end());
    }
    std::vector<LabImage> sample;
    sample.reserve(chosen.size());
    for (std::size_t i : chosen) sample.push_back(images[i]);
    out.palettes[c] = refine_palette<double>(sample, palettes.palettes[c], cfg).palette;
  });
  return out;
}

QuantizedDataset pack_dataset(std::span<const LabImage> images, std::span<const std::uint16_t> labels,
                              const ClusterModel& model, const ClusterPalettes& palettes, int threads) {
  if (images.empty()) throw UsageError("no images to pack");
  if (model.assignments.size() != images.size()) throw UsageError("cluster model does not match the image count");
  if (palettes.palettes.size() != model.k) throw UsageError("palette count does not match the cluster count");
  if (!labels.empty() && labels.size() != images.size()) throw UsageError("label count does not match the image count");
  QuantizedDataset ds;
  ds.q = palettes.q;
  ds.height = images.front().height();
  ds.width = images.front().width();
  const Eigen::Index colors = Eigen::Index{1} << palettes.q;
  for (const Palette& p : palettes.palettes) {
    if (p.size() != colors) throw InvariantError("palette size does not match q");
    std::vector<RgbPixel> rgb;
    for (Eigen::Index i = 0; i < p.size(); ++i) rgb.push_back(lab_to_srgb(p.color(i)));
    ds.palettes.push_back(std::move(rgb));
  }
  ds.records.resize(images.size());
  parallel_for(images.size(), threads, [&](std::size_t i) {
    if (images[i].height() != ds.height || images[i].width() != ds.width) {
      throw DataError("image " + std::to_string(i) + " differs in size from image 0");
    }
    const std::size_t c = model.assignments[i];
    QuantizedRecord& rec = ds.records[i];
    rec.cluster_id = static_cast<std::uint16_t>(c);
    rec.label = labels.empty() ? kNoLabel : labels[i];
    rec.indices = quantize_hard(images[i], palettes.palettes[c]).indices;
  });
  ds.validate();
  return ds;
}

QuantizedDataset baseline_dataset(std::span<const RasterImage> images, std::span<const std::uint16_t> labels,
                                  BaselineKind kind, int q, std::uint64_t seed, int threads) {
  if (images.empty()) throw UsageError("no images to quantize");
  if (images.size() > 0xFFFF) throw UsageError("per-image palettes support at most 65535 images");
  if (!labels.empty() && labels.size() != images.size()) throw UsageError("label count does not match the image count");
  QuantizedDataset ds;
  ds.q = q;
  ds.height = images.front().height();
  ds.width = images.front().width();
  ds.palettes.resize(images.size());
  ds.records.resize(images.size());
  parallel_for(images.size(), threads, [&](std::size_t i) {
    if (images[i].height() != ds.height || images[i].width() != ds.width) {
      throw DataError("image " + std::to_string(i) + " differs in size from image 0");
    }
    const BaselineResult r = run_baseline(kind, images[i], q, derive_seed(seed, kBaselineStream, i));
    for (Eigen::Index c = 0; c < r.palette.size(); ++c) ds.palettes[i].push_back(lab_to_srgb(r.palette.color(c)));
    ds.records[i] = {static_cast<std::uint16_t>(i), labels.empty() ? kNoLabel : labels[i], r.indices};
  });
  ds.validate();
  return ds;
}

QuantizeOutcome quantize_images(const ImageSet& input, const PipelineConfig& cfg) {
  cfg.validate();
  if (input.images.empty()) throw UsageError("no input images");
  QuantizeOutcome out;
  if (cfg.method != "dcq") {
    const BaselineKind kind = parse_baseline_kind(cfg.method);
    out.dataset = in_stage("baseline", [&] {
      return baseline_dataset(input.images, input.labels, kind, cfg.q, cfg.seed, cfg.threads);
    });
  } else {
    const auto features = in_stage("features", [&] { return load_feature_source(cfg.features, input.images); });
    const auto attention = in_stage("attention", [&] { return load_attention_source(cfg.attention, input.images); });
    const ClusterModel model = in_stage("cluster", [&] { return cluster_images(features, cfg.k, cfg.seed); });
    const std::vector<LabImage> lab = to_lab_images(input.images, cfg.threads);
    ClusterPalettes palettes = in_stage("palettes", [&] {
      return build_all_palettes(lab, model, attention, cfg.q, cfg.k_gra, cfg.seed, cfg.pixel_cap, cfg.threads);
    });
    if (cfg.refine) {
      RefineConfig rc = cfg.refine_config;
      rc.seed = cfg.seed;
      palettes = in_stage("refine", [&] { return refine_cluster_palettes(lab, model, palettes, rc, cfg.threads); });
    }
    out.dataset = in_stage("pack", [&] { return pack_dataset(lab, input.labels, model, palettes, cfg.threads); });
  }
  out.report = in_stage("eval", [&] {
    return evaluate_dataset(input.images, out.dataset, cfg.refine_config.weights, cfg.method, cfg.threads);
  });
  return out;
}

DatasetReport run_quantize(const PipelineConfig& cfg) {
  if (cfg.out.empty()) throw UsageError("no output path given (--out)");
  const ImageSet input = in_stage("ingest", [&] { return load_image_set(cfg.input, cfg.labels); });
  QuantizeOutcome outcome = quantize_images(input, cfg);
  in_stage("write", [&] {
    OutputTransaction tx;
    tx.stage(cfg.out, encode(outcome.dataset));
    tx.stage(cfg.report_path(), as_bytes(format_report_csv(outcome.report)));
    tx.commit();
  });
  return outcome.report;
}

void write_cluster_model(const std::filesystem::path& path, const ClusterModel& model) {
  json centroids = json::array();
  for (Eigen::Index i = 0; i < model.centroids.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < model.centroids.cols(); ++j) row.push_back(model.centroids(i, j));
    centroids.push_back(std::move(row));
  }
  const json doc = {{"format", "dcq-clusters"}, {"version", 1},          {"k", model.k},
                    {"seed", model.seed},       {"inertia", model.inertia}, {"assignments", model.assignments},
                    {"centroids", centroids}};
  write_text_file(path, doc.dump() + "\n");
}

ClusterModel load_cluster_model(const std::filesystem::path& path) {
  require_file(path, "cluster model");
  const Bytes raw = read_file(path);
  try {
    const json doc = json::parse(raw.begin(), raw.end());
    if (doc.at("format") != "dcq-clusters" || doc.at("version") != 1) {
      throw DataError(path.string() + " is not a version 1 cluster model");
    }
    ClusterModel model;
    model.k = doc.at("k").get<std::size_t>();
    model.seed = doc.at("seed").get<std::uint64_t>();
    model.inertia = doc.at("inertia").get<double>();
    model.assignments = doc.at("assignments").get<std::vector<std::size_t>>();
    const auto rows = doc.at("centroids").get<std::vector<std::vector<double>>>();
    if (rows.size() != model.k) throw DataError(path.string() + ": centroid count does not match k");
    const std::size_t dim = rows.empty() ? 0 : rows.front().size();
    model.centroids.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != dim) throw DataError(path.string() + ": ragged centroid rows");
      for (std::size_t j = 0; j < dim; ++j) model.centroids(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
    for (std::size_t a : model.assignments) {
      if (a >= model.k) throw DataError(path.string() + ": assignment out of range");
    }
    return model;
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_cluster_palettes(const std::filesystem::path& path, const ClusterPalettes& palettes) {
  json list = json::array();
  for (const Palette& p : palettes.palettes) {
    json colors = json::array();
    for (Eigen::Index i = 0; i < p.size(); ++i) colors.push_back({p.colors()(i, 0), p.colors()(i, 1), p.colors()(i, 2)});
    list.push_back(std::move(colors));
  }
  const json doc = {{"format", "dcq-palettes"}, {"version", 1}, {"q", palettes.q}, {"palettes", list}};
  write_text_file(path, doc.dump() + "\n");
}

ClusterPalettes load_cluster_palettes(const std::filesystem::path& path) {
  require_file(path, "palette file");
  const Bytes raw = read_file(path);
  try {
    const json doc = json::parse(raw.begin(), raw.end());
    if (doc.at("format") != "dcq-palettes" || doc.at("version") != 1) {
      throw DataError(path.string() + " is not a version 1 palette file");
    }
    ClusterPalettes out;
    out.q = doc.at("q").get<int>();
    if (out.q < 1 || out.q > 8) throw DataError(path.string() + ": q outside [1, 8]");
    for (const auto& colors : doc.at("palettes")) {
      const auto rows = colors.get<std::vector<std::array<double, 3>>>();
      if (rows.size() != (std::size_t{1} << out.q)) throw DataError(path.string() + ": palette size does not match q");
      Palette::Colors m(static_cast<Eigen::Index>(rows.size()), 3);
      for (std::size_t i = 0; i < rows.size(); ++i) {
        for (int c = 0; c < 3; ++c) m(static_cast<Eigen::Index>(i), c) = rows[i][static_cast<std::size_t>(c)];
      }
      out.palettes.emplace_back(std::move(m));
    }
    return out;
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void run_cluster_stage(const PipelineConfig& cfg, const std::filesystem::path& model_out) {
  cfg.validate();
  const ImageSet input = in_stage("ingest", [&] { return load_image_set(cfg.input, cfg.labels); });
  const auto features = in_stage("features", [&] { return load_feature_source(cfg.features, input.images); });
  const ClusterModel model = in_stage("cluster", [&] { return cluster_images(features, cfg.k, cfg.seed); });
  in_stage("write", [&] { write_cluster_model(model_out, model); });
}

void run_palettes_stage(const PipelineConfig& cfg, const std::filesystem::path& model_path,
                        const std::filesystem::path& palettes_out) {
  cfg.validate();
  const ImageSet input = in_stage("ingest", [&] { return load_image_set(cfg.input, cfg.labels); });
  const ClusterModel model = in_stage("cluster", [&] { return load_cluster_model(model_path); });
  const auto attention = in_stage("attention", [&] { return load_attention_source(cfg.attention, input.images); });
  const std::vector<LabImage> lab = to_lab_images(input.images, cfg.threads);
  const ClusterPalettes palettes = in_stage("palettes", [&] {
    return build_all_palettes(lab, model, attention, cfg.q, cfg.k_gra, cfg.seed, cfg.pixel_cap, cfg.threads);
  });
  in_stage("write", [&] { write_cluster_palettes(palettes_out, palettes); });
}

void run_refine_stage(const PipelineConfig& cfg, const std::filesystem::path& model_path,
                      const std::filesystem::path& palettes_in, const std::filesystem::path& palettes_out) {
  cfg.validate();
  const ImageSet input = in_stage("ingest", [&] { return load_image_set(cfg.input, cfg.labels); });
  const ClusterModel model = in_stage("cluster", [&] { return load_cluster_model(model_path); });
  const ClusterPalettes palettes = in_stage("palettes", [&] { return load_cluster_palettes(palettes_in); });
  const std::vector<LabImage> lab = to_lab_images(input.images, cfg.threads);
  RefineConfig rc = cfg.refine_config;
  rc.seed = cfg.seed;
  const ClusterPalettes refined =
      in_stage("refine", [&] { return refine_cluster_palettes(lab, model, palettes, rc, cfg.threads); });
  in_stage("write", [&] { write_cluster_palettes(palettes_out, refined); });
}

void run_pack_stage(const PipelineConfig& cfg, const std::filesystem::path& model_path,
                    const std::filesystem::path& palettes_path) {
  cfg.validate();
  if (cfg.out.empty()) throw UsageError("no output path given (--out)");
  const ImageSet input = in_stage("ingest", [&] { return load_image_set(cfg.input, cfg.labels); });
  const ClusterModel model = in_stage("cluster", [&] { return load_cluster_model(model_path); });
  const ClusterPalettes palettes = in_stage("palettes", [&] { return load_cluster_palettes(palettes_path); });
  const std::vector<LabImage> lab = to_lab_images(input.images, cfg.threads);
  const QuantizedDataset ds =
      in_stage("pack", [&] { return pack_dataset(lab, input.labels, model, palettes, cfg.threads); });
  in_stage("write", [&] { write_dataset(cfg.out, ds); });
}

DatasetInfo inspect_dataset(const std::filesystem::path& path) {
  require_file(path, "quantized dataset");
  const Bytes raw = read_file(path);
  const QuantizedDataset ds = decode(raw);
  DatasetInfo info;
  info.q = ds.q;
  info.height = ds.height;
  info.width = ds.width;
  info.images = ds.num_images();
  info.clusters = ds.num_clusters();
  info.distinct_colors = distinct_color_count(ds);
  info.file_bytes = raw.size();
  info.expected_bytes = encoded_size(ds.q, ds.num_clusters(), ds.num_images(), ds.height, ds.width);
  return info;
}

std::string format_info(const DatasetInfo& info) {
  std::ostringstream out;
  out << "q: " << info.q << '\n'
      << "height: " << info.height << '\n'
      << "width: " << info.width << '\n'
      << "images: " << info.images << '\n'
      << "clusters: " << info.clusters << '\n'
      << "distinct_colors: " << info.distinct_colors << '\n'
      << "bytes: " << info.file_bytes << '\n'
      << "expected_bytes: " << info.expected_bytes << '\n'
      << "compression_ratio: " << format_number(compression_ratio(info.q).value()) << '\n';
  return out.str();
}

}  // namespace dcq
