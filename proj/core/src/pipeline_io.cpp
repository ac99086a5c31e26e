#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "csparts/config.hpp"
#include "csparts/errors.hpp"
#include "csparts/image_io.hpp"
#include "csparts/pipeline.hpp"
#include "text_kv.hpp"

namespace csparts {

namespace {

bool is_pipeline_key(std::string_view key) {
  return !key.starts_with("synth.") && !key.ends_with(".dir");
}

void require_file(const std::filesystem::path& p) {
  if (!std::filesystem::is_regular_file(p)) throw FormatError("missing model artifact '" + p.string() + "'");
}

}  // namespace

void save_pipeline(const std::filesystem::path& dir, const PipelineModel& m) {
  std::filesystem::create_directories(dir);
  save_backbone(dir / "backbone", m.backbone);
  save_linear_model(dir / "selection", m.selection);
  save_linear_model(dir / "final", m.final_model);
  if (m.final_nofs) {
    save_linear_model(dir / "final_nofs", *m.final_nofs);
  } else {
    std::filesystem::remove(dir / "final_nofs.txt");
    std::filesystem::remove(dir / "final_nofs.psf");
  }
  const RunConfig rc = RunConfig::from(SynthConfig{}, m.config);
  std::string text = "# csparts model config v1\n";
  for (const auto& [key, value] : rc.values())
    if (is_pipeline_key(key)) text += key + "=" + value + "\n";
  detail::write_text(dir / "config.txt", text);
}

PipelineModel load_pipeline(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw FormatError("missing model artifact '" + dir.string() + "' (directory)");
  for (const char* f : {"config.txt", "backbone.arch.txt", "backbone.psf", "selection.txt", "selection.psf", "final.txt",
                        "final.psf"})
    require_file(dir / f);

  PipelineModel m;
  {
    std::ifstream in(dir / "config.txt");
    std::stringstream ss;
    ss << in.rdbuf();
    try {
      m.config = RunConfig::parse(ss.str()).pipeline();
    } catch (const ArgumentError& e) {
      throw FormatError(std::string("invalid model config '") + (dir / "config.txt").string() + "': " + e.what());
    }
  }
  m.backbone = load_backbone(dir / "backbone");
  m.selection = load_linear_model(dir / "selection");
  m.final_model = load_linear_model(dir / "final");
  if (std::filesystem::exists(dir / "final_nofs.txt")) m.final_nofs = load_linear_model(dir / "final_nofs");

  const std::size_t D = m.backbone.feature_dim();
  if (m.selection.dim != D || m.selection.regularization != Regularization::L1)
    throw FormatError("selection model in '" + dir.string() + "' does not match the backbone");
  if (m.final_model.dim != (m.config.k + 1) * D || (m.final_nofs && m.final_nofs->dim != (m.config.k + 1) * D))
    throw FormatError("final model in '" + dir.string() + "' does not have dimension (k+1)*D");
  return m;
}

void write_eval_report(const std::filesystem::path& dir, const EvalReport& r) {
  std::filesystem::create_directories(dir);
  std::ostringstream summary;
  summary << "variant,accuracy,correct,total,mean_iou\n";
  for (const auto& v : r.variants) {
    std::size_t correct = 0;
    for (std::size_t c = 0; c < r.num_classes; ++c) correct += v.confusion[c][c];
    summary << v.name << ',' << detail::format_double(v.accuracy) << ',' << correct << ',' << v.records.size() << ','
            << (v.mean_iou ? detail::format_double(*v.mean_iou) : "") << '\n';

    std::ostringstream cm;
    cm << "truth";
    for (std::size_t c = 0; c < r.num_classes; ++c) cm << ",pred_" << c;
    cm << '\n';
    std::size_t max_count = 0;
    for (std::size_t t = 0; t < r.num_classes; ++t) {
      cm << t;
      for (std::size_t p = 0; p < r.num_classes; ++p) {
        cm << ',' << v.confusion[t][p];
        max_count = std::max(max_count, v.confusion[t][p]);
      }
      cm << '\n';
    }
    detail::write_text(dir / ("confusion_" + v.name + ".csv"), cm.str());

    std::ostringstream rec;
    rec << "image_id,truth,initial,final,num_boxes,best_iou\n";
    std::ostringstream boxes;
    boxes << kBoxCsvHeader << '\n';
    for (const auto& ir : v.records) {
      rec << ir.id << ',' << ir.truth << ',' << ir.initial << ',' << ir.final << ',' << ir.boxes.size() << ','
          << (ir.best_iou ? detail::format_double(*ir.best_iou) : "") << '\n';
      for (const auto& b : ir.boxes) write_box_csv_row(boxes, ir.id, b);
    }
    detail::write_text(dir / ("records_" + v.name + ".csv"), rec.str());
    if (v.name != "baseline") detail::write_text(dir / ("boxes_" + v.name + ".csv"), boxes.str());

    // Rendered matrix: log(1 + count), 8x8 pixels per cell.
    constexpr std::size_t cell = 8;
    Grid2D img(r.num_classes * cell, r.num_classes * cell, 0.0f);
    const double denom = std::log1p(static_cast<double>(max_count));
    for (std::size_t t = 0; t < r.num_classes; ++t)
      for (std::size_t p = 0; p < r.num_classes; ++p) {
        const float val =
            denom > 0.0 ? static_cast<float>(std::log1p(static_cast<double>(v.confusion[t][p])) / denom) : 0.0f;
        for (std::size_t y = 0; y < cell; ++y)
          for (std::size_t x = 0; x < cell; ++x) img(t * cell + y, p * cell + x) = val;
      }
    write_pgm(dir / ("confusion_" + v.name + ".pgm"), img);
  }
  detail::write_text(dir / "summary.csv", summary.str());
}

}  // namespace csparts
