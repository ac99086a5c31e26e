#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "csparts/backbone.hpp"
#include "csparts/parts.hpp"
#include "csparts/saliency.hpp"
#include "csparts/sparse_linear.hpp"
#include "csparts/synthgen.hpp"

namespace csparts {

struct PipelineConfig {
  std::string architecture{kDefaultArchitecture};
  TrainConfig train;
  std::size_t k = 4;
  double select_lambda = 30.0;
  double final_lambda = 1e-3;
  SolverConfig solver;
  ThresholdMethod threshold = ThresholdMethod::Mean;
  std::size_t nms_radius = 0;  // 0 = default_nms_radius
  BoxConfig boxes;
  std::array<double, kClusterDims> cluster_weights{1, 1, 1, 1, 1, 1};
  /// Also train the final classifier on parts from all channels, for the
  /// no-feature-selection comparison.
  bool train_ablation = true;
  std::uint64_t seed = 0;

  friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

struct PipelineModel {
  BackboneParams backbone;
  LinearModel selection;
  LinearModel final_model;
  std::optional<LinearModel> final_nofs;
  PipelineConfig config;

  std::size_t feature_dim() const { return backbone.feature_dim(); }
};

/// Which channels drive the saliency map.
enum class ChannelMode { Selected, All };

struct Sample {
  Image image;
  Label label = 0;
  std::optional<GlyphBox> gt;
  std::string id;
};

std::vector<Sample> to_samples(std::span<const SynthRecord> records);

/// Resizes to the backbone input size when needed.
Image prepare_image(const Image& img, const BackboneParams& p);

struct PartEstimate {
  std::size_t initial_class = 0;
  std::vector<double> initial_scores;
  std::vector<std::size_t> channels;  // the saliency channel set
  SaliencyMap saliency;               // normalized; empty when channels is empty
  std::vector<PartBox> boxes;
};

PartEstimate estimate_parts(const Image& img, const PipelineModel& m, ChannelMode mode = ChannelMode::Selected);
PartEstimate estimate_parts(const Image& img, std::span<const float> global, const PipelineModel& m,
                            ChannelMode mode = ChannelMode::Selected);

/// [global | part rank 1 | ... | part rank k], missing parts zero-filled.
FeatureVector extract_part_features(const Image& img, std::span<const PartBox> boxes, const PipelineModel& m);
FeatureVector extract_part_features(const Image& img, std::span<const float> global, std::span<const PartBox> boxes,
                                    const PipelineModel& m);

/// (stage, seconds) after each training stage.
using StageLogger = std::function<void(std::string_view, double)>;

PipelineModel train_pipeline(std::span<const Sample> train, const PipelineConfig& cfg, const StageLogger& log = {});

Prediction classify(const Image& img, const PipelineModel& m, ChannelMode mode = ChannelMode::Selected);

struct ImageRecord {
  std::string id;
  Label truth = 0;
  std::size_t initial = 0;
  std::size_t final = 0;
  std::vector<PartBox> boxes;
  std::optional<double> best_iou;
};

struct VariantReport {
  std::string name;  // "baseline", "nofs", "fs"
  double accuracy = 0.0;
  std::vector<std::vector<std::size_t>> confusion;  // [truth][predicted]
  std::vector<ImageRecord> records;
  std::optional<double> mean_iou;
};

struct EvalOptions {
  bool baseline = true;
  bool nofs = true;
  bool fs = true;
};

struct EvalReport {
  std::size_t num_classes = 0;
  std::vector<VariantReport> variants;

  const VariantReport* find(std::string_view name) const;
};

EvalReport evaluate(std::span<const Sample> test, const PipelineModel& m, const EvalOptions& opts = {});

/// Confusion matrix from (truth, predicted) pairs.
std::vector<std::vector<std::size_t>> confusion_matrix(std::size_t num_classes, std::span<const Label> truth,
                                                       std::span<const std::size_t> predicted);

/// Model bundle: backbone.{arch.txt,psf}, selection.{txt,psf}, final.{txt,psf},
/// optional final_nofs.{txt,psf}, and config.txt.
void save_pipeline(const std::filesystem::path& dir, const PipelineModel& m);
PipelineModel load_pipeline(const std::filesystem::path& dir);

/// Per variant: confusion_<name>.csv, records_<name>.csv, confusion_<name>.pgm
/// (log(1+count) scaled), plus summary.csv.
void write_eval_report(const std::filesystem::path& dir, const EvalReport& r);

}  // namespace csparts
