#include <algorithm>
#include <chrono>
#include <exception>
#include <numeric>
#include <thread>

#include "csparts/errors.hpp"
#include "csparts/pipeline.hpp"

namespace csparts {

namespace {

// Runs fn(i) for i in [0, n). Results must be written by index so the outcome
// does not depend on scheduling.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(n, std::max(1u, std::thread::hardware_concurrency()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const NumericError*>(&e)) return 3;
  return 2;
}

template <typename Fn>
auto run_stage(std::string_view stage, const StageLogger& log, Fn&& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  try {
    if constexpr (std::is_void_v<decltype(fn())>) {
      fn();
      if (log) log(stage, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    } else {
      auto out = fn();
      if (log) log(stage, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
      return out;
    }
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(std::string(stage), e.what(), exit_code_for(e));
  }
}

std::vector<std::size_t> all_channels(std::size_t d) {
  std::vector<std::size_t> out(d);
  std::iota(out.begin(), out.end(), 0);
  return out;
}

const LinearModel& final_for(const PipelineModel& m, ChannelMode mode) {
  if (mode == ChannelMode::Selected) return m.final_model;
  if (!m.final_nofs) throw MisuseError("model bundle has no classifier for the no-feature-selection variant");
  return *m.final_nofs;
}

}  // namespace

std::vector<Sample> to_samples(std::span<const SynthRecord> records) {
  std::vector<Sample> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back({r.image, r.label, r.glyph, r.id});
  return out;
}

Image prepare_image(const Image& img, const BackboneParams& p) {
  if (img.channels() != p.input_channels)
    throw ArgumentError("image has " + std::to_string(img.channels()) + " channels, backbone expects " +
                        std::to_string(p.input_channels));
  return resize_bilinear(img, p.input_height, p.input_width);
}

PartEstimate estimate_parts(const Image& img, const PipelineModel& m, ChannelMode mode) {
  const Image prepared = prepare_image(img, m.backbone);
  const FeatureVector global = extract_features(prepared, m.backbone);
  return estimate_parts(prepared, global, m, mode);
}

PartEstimate estimate_parts(const Image& img, std::span<const float> global, const PipelineModel& m,
                            ChannelMode mode) {
  const PipelineConfig& cfg = m.config;
  PartEstimate est;
  const Prediction initial = predict(m.selection, global);
  est.initial_class = initial.label;
  est.initial_scores = initial.scores;
  est.channels = mode == ChannelMode::Selected ? selected_channels(m.selection, initial.label).channels
                                               : all_channels(m.feature_dim());
  if (est.channels.empty()) return est;

  const Image prepared = prepare_image(img, m.backbone);
  const auto grads = input_gradients(prepared, m.backbone, est.channels);
  est.saliency = normalize(compute_saliency(grads));
  const SparseSaliency sparse = threshold(est.saliency, cfg.threshold);
  if (sparse.pixels.empty()) return est;

  const std::size_t radius = cfg.nms_radius ? cfg.nms_radius : default_nms_radius(sparse.rows, sparse.cols);
  const auto peaks = find_peaks(sparse, cfg.k, radius);
  if (peaks.empty()) return est;
  ClusterConfig ccfg;
  ccfg.weights = cfg.cluster_weights;
  const auto assignment = cluster_pixels(sparse, prepared, peaks, ccfg);
  est.boxes = boxes_from_clusters(assignment, cfg.boxes);
  return est;
}

FeatureVector extract_part_features(const Image& img, std::span<const PartBox> boxes, const PipelineModel& m) {
  const Image prepared = prepare_image(img, m.backbone);
  const FeatureVector global = extract_features(prepared, m.backbone);
  return extract_part_features(prepared, global, boxes, m);
}

FeatureVector extract_part_features(const Image& img, std::span<const float> global, std::span<const PartBox> boxes,
                                    const PipelineModel& m) {
  const std::size_t D = m.feature_dim(), k = m.config.k;
  if (global.size() != D) throw ArgumentError("global feature has wrong dimension");
  if (boxes.size() > k) throw ArgumentError("more boxes than configured parts k");
  const Image prepared = prepare_image(img, m.backbone);

  std::vector<const PartBox*> ordered;
  for (const auto& b : boxes) ordered.push_back(&b);
  std::stable_sort(ordered.begin(), ordered.end(), [](const PartBox* a, const PartBox* b) { return a->rank < b->rank; });

  FeatureVector out(global.begin(), global.end());
  out.reserve((k + 1) * D);
  for (const PartBox* b : ordered) {
    if (b->x1 >= prepared.width() || b->y1 >= prepared.height() || b->x0 > b->x1 || b->y0 > b->y1)
      throw std::logic_error("part box outside image after clamping");
    const Image crop = prepared.crop(b->x0, b->y0, b->x1, b->y1);
    const FeatureVector f =
        extract_features(resize_bilinear(crop, m.backbone.input_height, m.backbone.input_width), m.backbone);
    out.insert(out.end(), f.begin(), f.end());
  }
  out.resize((k + 1) * D, 0.0f);
  return out;
}

PipelineModel train_pipeline(std::span<const Sample> train, const PipelineConfig& cfg, const StageLogger& log) {
  if (train.empty()) throw StageError("train", "empty training set", 2);
  if (cfg.k == 0) throw StageError("config", "parts k must be at least 1", 1);

  PipelineModel m;
  m.config = cfg;
  std::vector<Image> images;
  std::vector<Label> labels;
  run_stage("prepare", log, [&] {
    const Image& first = train.front().image;
    m.backbone = make_backbone(cfg.architecture, first.height(), first.width(), first.channels(), cfg.seed);
    for (const auto& s : train) {
      images.push_back(prepare_image(s.image, m.backbone));
      labels.push_back(s.label);
    }
  });

  run_stage("backbone", log, [&] {
    TrainConfig tc = cfg.train;
    tc.seed = cfg.seed;
    m.backbone = train_backbone(images, labels, m.backbone, tc);
  });

  std::vector<FeatureVector> globals(images.size());
  run_stage("global-features", log,
            [&] { parallel_for(images.size(), [&](std::size_t i) { globals[i] = extract_features(images[i], m.backbone); }); });

  run_stage("feature-selection", log,
            [&] { m.selection = fit_ovr(globals, labels, Regularization::L1, cfg.select_lambda, cfg.solver); });

  auto part_features = [&](ChannelMode mode) {
    std::vector<FeatureVector> feats(images.size());
    parallel_for(images.size(), [&](std::size_t i) {
      const PartEstimate est = estimate_parts(images[i], globals[i], m, mode);
      feats[i] = extract_part_features(images[i], globals[i], est.boxes, m);
    });
    return feats;
  };

  const auto fs_feats = run_stage("parts", log, [&] { return part_features(ChannelMode::Selected); });
  run_stage("final-classifier", log,
            [&] { m.final_model = fit_ovr(fs_feats, labels, Regularization::L2, cfg.final_lambda, cfg.solver); });

  if (cfg.train_ablation) {
    const auto all_feats = run_stage("parts-nofs", log, [&] { return part_features(ChannelMode::All); });
    run_stage("final-classifier-nofs", log,
              [&] { m.final_nofs = fit_ovr(all_feats, labels, Regularization::L2, cfg.final_lambda, cfg.solver); });
  }
  return m;
}

Prediction classify(const Image& img, const PipelineModel& m, ChannelMode mode) {
  const LinearModel& model = final_for(m, mode);
  const Image prepared = prepare_image(img, m.backbone);
  const FeatureVector global = extract_features(prepared, m.backbone);
  const PartEstimate est = estimate_parts(prepared, global, m, mode);
  return predict(model, extract_part_features(prepared, global, est.boxes, m));
}

std::vector<std::vector<std::size_t>> confusion_matrix(std::size_t num_classes, std::span<const Label> truth,
                                                       std::span<const std::size_t> predicted) {
  if (truth.size() != predicted.size()) throw ArgumentError("truth and prediction counts differ");
  std::vector<std::vector<std::size_t>> cm(num_classes, std::vector<std::size_t>(num_classes, 0));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || static_cast<std::size_t>(truth[i]) >= num_classes || predicted[i] >= num_classes)
      throw ArgumentError("label out of range for confusion matrix");
    ++cm[static_cast<std::size_t>(truth[i])][predicted[i]];
  }
  return cm;
}

const VariantReport* EvalReport::find(std::string_view name) const {
  for (const auto& v : variants)
    if (v.name == name) return &v;
  return nullptr;
}

EvalReport evaluate(std::span<const Sample> test, const PipelineModel& m, const EvalOptions& opts) {
  if (test.empty()) throw ArgumentError("empty test set");
  if (opts.nofs) final_for(m, ChannelMode::All);
  EvalReport report;
  report.num_classes = m.selection.num_classes;

  const std::size_t n = test.size();
  std::vector<ImageRecord> base(n), fs(n), nofs(n);
  parallel_for(n, [&](std::size_t i) {
    const Sample& s = test[i];
    const Image prepared = prepare_image(s.image, m.backbone);
    const FeatureVector global = extract_features(prepared, m.backbone);
    const Prediction initial = predict(m.selection, global);
    base[i] = {s.id, s.label, initial.label, initial.label, {}, std::nullopt};
    auto run = [&](ChannelMode mode, ImageRecord& rec) {
      PartEstimate est = estimate_parts(prepared, global, m, mode);
      const Prediction p = predict(final_for(m, mode), extract_part_features(prepared, global, est.boxes, m));
      rec = {s.id, s.label, est.initial_class, p.label, std::move(est.boxes), std::nullopt};
      if (s.gt) rec.best_iou = localization_score(rec.boxes, *s.gt);
    };
    if (opts.fs) run(ChannelMode::Selected, fs[i]);
    if (opts.nofs) run(ChannelMode::All, nofs[i]);
  });

  auto summarize = [&](std::string name, std::vector<ImageRecord> recs) {
    VariantReport v;
    v.name = std::move(name);
    std::vector<Label> truth;
    std::vector<std::size_t> pred;
    double iou_sum = 0.0;
    bool have_iou = true;
    for (const auto& r : recs) {
      truth.push_back(r.truth);
      pred.push_back(r.final);
      if (r.best_iou) {
        iou_sum += *r.best_iou;
      } else {
        have_iou = false;
      }
    }
    v.confusion = confusion_matrix(report.num_classes, truth, pred);
    std::size_t correct = 0;
    for (std::size_t c = 0; c < report.num_classes; ++c) correct += v.confusion[c][c];
    v.accuracy = static_cast<double>(correct) / static_cast<double>(recs.size());
    if (have_iou && v.name != "baseline") v.mean_iou = iou_sum / static_cast<double>(recs.size());
    v.records = std::move(recs);
    report.variants.push_back(std::move(v));
  };
  if (opts.baseline) summarize("baseline", std::move(base));
  if (opts.nofs) summarize("nofs", std::move(nofs));
  if (opts.fs) summarize("fs", std::move(fs));
  return report;
}

}  // namespace csparts
