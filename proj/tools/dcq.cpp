// dcq: dataset color quantization command line.
//
// Exit codes: 0 success, 1 usage error, 2 data/parse error, 3 internal invariant violation.

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>

#include "dcq/error.hpp"
#include "dcq/eval.hpp"
#include "dcq/pipeline.hpp"
#include "dcq/png_io.hpp"
#include "dcq/store.hpp"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitInternal = 3;

dcq::EdgeLossWeights parse_weights(const std::string& text) {
  std::istringstream in(text);
  dcq::EdgeLossWeights w;
  char c1 = 0;
  char c2 = 0;
  if (!(in >> w.l >> c1 >> w.a >> c2 >> w.b) || c1 != ',' || c2 != ',' || !(in >> std::ws).eof()) {
    throw dcq::UsageError("--weights expects three comma-separated numbers, got '" + text + "'");
  }
  w.validate();
  return w;
}

// Raw flag values; converted into a PipelineConfig once parsing succeeded.
struct Flags {
  dcq::PipelineConfig cfg;
  std::string weights = "1,1,1";
  std::string refine = "on";

  dcq::PipelineConfig resolve() const {
    dcq::PipelineConfig out = cfg;
    if (refine != "on" && refine != "off") throw dcq::UsageError("--refine must be 'on' or 'off'");
    out.refine = refine == "on";
    out.refine_config.weights = parse_weights(weights);
    out.refine_config.seed = out.seed;
    return out;
  }
};

void add_input(CLI::App* app, Flags& f) {
  app->add_option("--input", f.cfg.input, "DCQI image container or directory of PNG files")->required();
  app->add_option("--labels", f.cfg.labels, "label manifest, one integer per line");
  app->add_option("--threads", f.cfg.threads, "worker threads")->check(CLI::PositiveNumber);
}

void add_clustering(CLI::App* app, Flags& f) {
  app->add_option("--clusters", f.cfg.k, "number of image clusters");
  app->add_option("--features", f.cfg.features, "'histogram' or a DCQF feature file");
  app->add_option("--seed", f.cfg.seed, "random seed");
}

void add_palette(CLI::App* app, Flags& f) {
  app->add_option("--bits", f.cfg.q, "palette bit depth q (2^q colors)");
  app->add_option("--kgra", f.cfg.k_gra, "fraction of highest-attention pixels kept per image");
  app->add_option("--attention", f.cfg.attention, "'none' or a DCQA attention file");
}

void add_refine(CLI::App* app, Flags& f) {
  app->add_option("--refine", f.refine, "edge-preserving palette refinement: on|off");
  app->add_option("--refine-steps", f.cfg.refine_config.steps, "refinement iterations");
  app->add_option("--refine-lr", f.cfg.refine_config.lr, "refinement learning rate");
  app->add_option("--refine-images", f.cfg.refine_config.sample_images, "images sampled per cluster for refinement");
  app->add_option("--weights", f.weights, "edge loss channel weights l,a,b");
}

void print_report(const dcq::DatasetReport& r, const dcq::PipelineConfig& cfg) {
  std::cout << "wrote " << cfg.out.string() << " and " << cfg.report_path().string() << '\n'
            << "method: " << r.method << "  q: " << r.q << "  images: " << r.rows.size()
            << "  distinct colors: " << r.distinct_colors
            << "  compression ratio: " << dcq::format_number(r.compression.value()) << '\n'
            << "mean mse_rgb: " << dcq::format_number(r.mse_rgb.mean)
            << "  mean psnr_db: " << dcq::format_number(r.psnr_db.mean)
            << "  mean edge_loss: " << dcq::format_number(r.edge_loss.mean) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dataset color quantization: shared cluster palettes, attention-guided palette learning, "
               "edge-preserving refinement and a bit-packed dataset container."};
  app.require_subcommand(1);

  Flags f;
  std::filesystem::path model_path;
  std::filesystem::path palettes_path;
  std::filesystem::path palettes_out;
  std::filesystem::path quantized_path;
  std::filesystem::path output;
  long image_index = -1;

  auto* quantize = app.add_subcommand("quantize", "run the full pipeline and write a DCQD container plus CSV report");
  add_input(quantize, f);
  add_clustering(quantize, f);
  add_palette(quantize, f);
  add_refine(quantize, f);
  quantize->add_option("--out", f.cfg.out, "DCQD output path")->required();
  quantize->add_option("--report", f.cfg.report, "CSV report path (default: <out>.csv)");
  quantize->add_option("--method", f.cfg.method, "dcq, kmeans, mediancut or octree");

  auto* cluster = app.add_subcommand("cluster", "cluster images and write the cluster model (JSON)");
  add_input(cluster, f);
  add_clustering(cluster, f);
  cluster->add_option("--out", output, "cluster model output")->required();

  auto* palettes = app.add_subcommand("palettes", "learn one palette per cluster (JSON)");
  add_input(palettes, f);
  add_palette(palettes, f);
  palettes->add_option("--seed", f.cfg.seed, "random seed");
  palettes->add_option("--cluster-model", model_path, "output of the cluster stage")->required();
  palettes->add_option("--out", output, "palette output")->required();

  auto* refine = app.add_subcommand("refine", "refine cluster palettes against the edge loss (JSON)");
  add_input(refine, f);
  add_refine(refine, f);
  refine->add_option("--seed", f.cfg.seed, "random seed");
  refine->add_option("--cluster-model", model_path, "output of the cluster stage")->required();
  refine->add_option("--palettes", palettes_path, "output of the palettes stage")->required();
  refine->add_option("--out", output, "refined palette output")->required();

  auto* pack = app.add_subcommand("pack", "quantize every image with its cluster palette and write DCQD");
  add_input(pack, f);
  pack->add_option("--cluster-model", model_path, "output of the cluster stage")->required();
  pack->add_option("--palettes", palettes_path, "output of the palettes or refine stage")->required();
  pack->add_option("--out", f.cfg.out, "DCQD output path")->required();

  auto* recon = app.add_subcommand("reconstruct", "decode a DCQD container back to images");
  recon->add_option("--input", quantized_path, "DCQD container")->required();
  recon->add_option("--image", image_index, "record to write as PNG; omit to write every image as DCQI");
  recon->add_option("--out", output, "PNG or DCQI output")->required();

  auto* eval = app.add_subcommand("eval", "score a DCQD container against the original images (CSV)");
  add_input(eval, f);
  eval->add_option("--quantized", quantized_path, "DCQD container")->required();
  eval->add_option("--weights", f.weights, "edge loss channel weights l,a,b");
  eval->add_option("--method", f.cfg.method, "method name recorded in the report");
  eval->add_option("--out", output, "CSV report path")->required();

  auto* baseline = app.add_subcommand("baseline", "quantize each image with its own palette (kmeans, mediancut, octree)");
  add_input(baseline, f);
  baseline->add_option("--method", f.cfg.method, "kmeans, mediancut or octree")->required();
  baseline->add_option("--bits", f.cfg.q, "palette bit depth q");
  baseline->add_option("--seed", f.cfg.seed, "random seed (kmeans only)");
  baseline->add_option("--weights", f.weights, "edge loss channel weights l,a,b");
  baseline->add_option("--out", f.cfg.out, "DCQD output path")->required();
  baseline->add_option("--report", f.cfg.report, "CSV report path (default: <out>.csv)");

  auto* info = app.add_subcommand("info", "summarize a DCQD container");
  info->add_option("--input", quantized_path, "DCQD container")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    const dcq::PipelineConfig cfg = f.resolve();
    if (quantize->parsed()) {
      print_report(dcq::run_quantize(cfg), cfg);
    } else if (cluster->parsed()) {
      dcq::run_cluster_stage(cfg, output);
    } else if (palettes->parsed()) {
      dcq::run_palettes_stage(cfg, model_path, output);
    } else if (refine->parsed()) {
      dcq::run_refine_stage(cfg, model_path, palettes_path, output);
    } else if (pack->parsed()) {
      dcq::run_pack_stage(cfg, model_path, palettes_path);
    } else if (recon->parsed()) {
      const dcq::QuantizedDataset ds = dcq::load_dataset(quantized_path);
      if (image_index >= 0) {
        if (static_cast<std::size_t>(image_index) >= ds.num_images()) {
          throw dcq::UsageError("--image " + std::to_string(image_index) + " is out of range (dataset has " +
                                std::to_string(ds.num_images()) + " images)");
        }
        dcq::write_png(output, dcq::reconstruct(ds.records[static_cast<std::size_t>(image_index)], ds));
      } else {
        std::vector<dcq::RasterImage> images;
        for (const auto& rec : ds.records) images.push_back(dcq::reconstruct(rec, ds));
        dcq::write_images(output, images);
      }
    } else if (eval->parsed()) {
      const dcq::ImageSet originals = dcq::load_image_set(cfg.input, cfg.labels);
      const dcq::QuantizedDataset ds = dcq::load_dataset(quantized_path);
      const dcq::DatasetReport report =
          dcq::evaluate_dataset(originals.images, ds, cfg.refine_config.weights, cfg.method, cfg.threads);
      dcq::write_report_csv(report, output);
    } else if (baseline->parsed()) {
      if (cfg.method == "dcq") throw dcq::UsageError("baseline --method must be kmeans, mediancut or octree");
      print_report(dcq::run_quantize(cfg), cfg);
    } else if (info->parsed()) {
      std::cout << dcq::format_info(dcq::inspect_dataset(quantized_path));
    }
  } catch (const dcq::UsageError& e) {
    std::cerr << "dcq: " << e.what() << '\n';
    return kExitUsage;
  } catch (const dcq::DataError& e) {
    std::cerr << "dcq: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "dcq: internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return EXIT_SUCCESS;
}
