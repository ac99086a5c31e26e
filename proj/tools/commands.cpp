#include "commands.hpp"

#include <array>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <ostream>

#include "csparts/errors.hpp"
#include "csparts/image_io.hpp"
#include "csparts/pipeline.hpp"

namespace csparts::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kResolvedName = "run_config.txt";

fs::path require_dir_key(const RunConfig& cfg, std::string_view key) {
  const auto& v = cfg.get(key);
  if (v.empty()) throw ArgumentError("config key '" + std::string(key) + "' is not set");
  return fs::path(v);
}

void write_resolved(const fs::path& dir, const RunConfig& cfg) {
  fs::create_directories(dir);
  cfg.save(dir / kResolvedName);
}

// Config of a loaded bundle, with run-specific keys carried over.
RunConfig bundle_config(const RunConfig& run, const PipelineConfig& model_cfg) {
  RunConfig c = RunConfig::from(run.synth(), model_cfg);
  for (const char* key : {"data.dir", "model.dir", "out.dir"}) c.set(key, run.get(key));
  return c;
}

void draw_box(Image& img, const PartBox& b, const std::array<float, 3>& color) {
  std::vector<float> data(img.data().begin(), img.data().end());
  auto put = [&](std::size_t y, std::size_t x) {
    for (std::size_t c = 0; c < img.channels(); ++c)
      data[(y * img.width() + x) * img.channels() + c] = img.channels() == 3 ? color[c] : 1.0f;
  };
  for (std::size_t x = b.x0; x <= b.x1; ++x) {
    put(b.y0, x);
    put(b.y1, x);
  }
  for (std::size_t y = b.y0; y <= b.y1; ++y) {
    put(y, b.x0);
    put(y, b.x1);
  }
  img = Image(img.height(), img.width(), img.channels(), std::move(data));
}

}  // namespace

RunConfig resolve_config(const CommonOptions& opts) {
  RunConfig cfg = opts.config_file ? RunConfig::load(*opts.config_file) : RunConfig{};
  for (const auto& o : opts.overrides) cfg.set(o);
  return cfg;
}

int cmd_synth(const RunConfig& cfg, std::ostream& out) {
  const auto dir = require_dir_key(cfg, "data.dir");
  const auto ds = generate(cfg.synth());
  write_dataset(dir, ds);
  write_resolved(dir, cfg);
  out << "wrote " << ds.train.size() << " train and " << ds.test.size() << " test images to " << dir.string() << '\n';
  return 0;
}

int cmd_train(const RunConfig& cfg, std::ostream& out) {
  const auto data_dir = require_dir_key(cfg, "data.dir");
  const auto model_dir = require_dir_key(cfg, "model.dir");
  const auto ds = read_dataset(data_dir);
  const auto samples = to_samples(ds.train);

  const auto model = train_pipeline(samples, cfg.pipeline(), [&](std::string_view stage, double sec) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "stage %-22.*s %8.2f s\n", static_cast<int>(stage.size()), stage.data(), sec);
    out << buf << std::flush;
  });
  save_pipeline(model_dir, model);
  write_resolved(model_dir, cfg);

  const auto report = sparsity_report(model.selection);
  std::ofstream csv(model_dir / "sparsity.csv", std::ios::binary);
  csv << "class,nonzero,percent\n";
  out << "selected channels per class (D=" << model.feature_dim() << ")\n";
  double mean = 0.0;
  for (const auto& r : report) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", r.percent);
    csv << r.class_id << ',' << r.nonzero << ',' << buf << '\n';
    out << "  class " << r.class_id << ": " << r.nonzero << " (" << buf << "%)\n";
    mean += r.percent / static_cast<double>(report.size());
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", mean);
  out << "  mean: " << buf << "%\n";
  return 0;
}

int cmd_parts(const RunConfig& cfg, const PartsOptions& opts, std::ostream& out) {
  const auto model_dir = require_dir_key(cfg, "model.dir");
  const auto out_dir = require_dir_key(cfg, "out.dir");
  auto model = load_pipeline(model_dir);
  const Image raw = load_image(opts.image);
  const Image img = prepare_image(raw, model.backbone);
  const auto pe = estimate_parts(img, model);

  fs::create_directories(out_dir);
  const std::string id = opts.image_id.empty() ? opts.image.stem().string() : opts.image_id;
  std::ofstream csv(out_dir / "boxes.csv", std::ios::binary);
  csv << kBoxCsvHeader << '\n';
  for (const auto& b : pe.boxes) write_box_csv_row(csv, id, b);

  const SaliencyMap sal = pe.channels.empty() ? SaliencyMap{Grid2D(img.height(), img.width()), true} : pe.saliency;
  write_saliency_pgm(out_dir / "saliency.pgm", sal);

  static constexpr std::array<std::array<float, 3>, 4> kColors{{{1, 0, 0}, {0, 1, 0}, {0, 0.4f, 1}, {1, 1, 0}}};
  Image overlay = img;
  for (const auto& b : pe.boxes) draw_box(overlay, b, kColors[(b.rank - 1) % kColors.size()]);
  write_image(out_dir / "overlay.ppm", overlay);
  write_resolved(out_dir, bundle_config(cfg, model.config));

  out << "initial class " << pe.initial_class << ", " << pe.channels.size() << " channels, " << pe.boxes.size()
      << " boxes\n";
  return 0;
}

int cmd_eval(const RunConfig& cfg, const EvalVariants& variants, std::ostream& out) {
  const auto model_dir = require_dir_key(cfg, "model.dir");
  const auto data_dir = require_dir_key(cfg, "data.dir");
  const auto out_dir = require_dir_key(cfg, "out.dir");
  const auto model = load_pipeline(model_dir);
  const auto ds = read_dataset(data_dir);
  const auto samples = to_samples(ds.test);

  EvalOptions opts;
  if (variants.baseline || variants.nofs || variants.fs) {
    opts.baseline = variants.baseline;
    opts.nofs = variants.nofs;
    opts.fs = variants.fs;
  } else if (!model.final_nofs) {
    opts.nofs = false;
  }
  const auto report = evaluate(samples, model, opts);
  write_eval_report(out_dir, report);
  write_resolved(out_dir, bundle_config(cfg, model.config));

  for (const auto& v : report.variants) {
    char buf[128];
    if (v.mean_iou)
      std::snprintf(buf, sizeof buf, "%-8s accuracy %.4f  mean IoU %.4f\n", v.name.c_str(), v.accuracy, *v.mean_iou);
    else
      std::snprintf(buf, sizeof buf, "%-8s accuracy %.4f\n", v.name.c_str(), v.accuracy);
    out << buf;
  }
  return 0;
}

int report_error(std::string_view stage, std::ostream& err) {
  try {
    throw;
  } catch (const StageError& e) {
    err << "csparts: " << e.what() << '\n';
    return e.exit_code();
  } catch (const NumericError& e) {
    err << "csparts: [" << stage << "] " << e.what() << '\n';
    return 3;
  } catch (const ArgumentError& e) {
    err << "csparts: [" << stage << "] " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "csparts: [" << stage << "] " << e.what() << '\n';
    return 2;
  }
}

}  // namespace csparts::cli
