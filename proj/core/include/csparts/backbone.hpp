#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "csparts/grid.hpp"

namespace csparts {

using FeatureVector = std::vector<float>;
using Label = int;

struct LayerSpec {
  enum class Kind { Conv, Relu, MaxPool2 };
  Kind kind = Kind::Conv;
  std::size_t out_channels = 0;  // Conv only
  std::size_t kernel = 3;        // Conv only; odd, zero padding kernel/2

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

/// Weights of one convolution: out x in x k x k row-major, plus one bias per output channel.
struct ConvWeights {
  std::size_t out_channels = 0;
  std::size_t in_channels = 0;
  std::size_t kernel = 0;
  std::vector<float> weight;
  std::vector<float> bias;

  friend bool operator==(const ConvWeights&, const ConvWeights&) = default;
};

/// Architecture plus weights of the convolutional feature extractor.
/// The final stage's channel count is the feature dimension D; features are
/// obtained by global average pooling of that stage.
struct BackboneParams {
  std::size_t input_height = 64;
  std::size_t input_width = 64;
  std::size_t input_channels = 3;
  std::vector<LayerSpec> layers;
  std::vector<ConvWeights> convs;  // one entry per Conv layer, in order
  std::uint64_t seed = 0;

  std::size_t feature_dim() const;
  /// Deterministic architecture descriptor, e.g. "conv3:16 relu pool2 conv3:32".
  std::string architecture() const;
  std::size_t parameter_count() const;

  friend bool operator==(const BackboneParams&, const BackboneParams&) = default;
};

inline constexpr std::string_view kDefaultArchitecture =
    "conv3:16 relu pool2 conv3:32 relu pool2 conv3:64 relu";

std::vector<LayerSpec> parse_architecture(std::string_view arch);

/// Builds params with Glorot-uniform kernels (bound sqrt(6/(fan_in+fan_out))) and zero biases.
BackboneParams make_backbone(std::string_view arch, std::size_t input_height, std::size_t input_width,
                             std::size_t input_channels, std::uint64_t seed);

/// Output of the last stage: D maps of size rows x cols, channel-major.
class ChannelStack {
public:
  ChannelStack() = default;
  ChannelStack(std::size_t channels, std::size_t rows, std::size_t cols, std::vector<float> data);

  std::size_t channels() const noexcept { return channels_; }
  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  float at(std::size_t d, std::size_t r, std::size_t c) const { return data_[(d * rows_ + r) * cols_ + c]; }
  std::span<const float> channel(std::size_t d) const { return std::span(data_).subspan(d * rows_ * cols_, rows_ * cols_); }
  std::span<const float> data() const noexcept { return data_; }

  friend bool operator==(const ChannelStack&, const ChannelStack&) = default;

private:
  std::size_t channels_ = 0;
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<float> data_;
};

/// Signed derivative of one pooled feature w.r.t. every input value; same
/// layout as the input Image.
struct GradientMap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;
  std::vector<float> data;

  float at(std::size_t y, std::size_t x, std::size_t c) const { return data[(y * width + x) * channels + c]; }

  friend bool operator==(const GradientMap&, const GradientMap&) = default;
};

struct ForwardResult {
  ChannelStack stack;
  FeatureVector features;
};

ForwardResult forward(const Image& img, const BackboneParams& p);

/// Global feature vector only.
FeatureVector extract_features(const Image& img, const BackboneParams& p);

/// Exact reverse-mode gradient of feature d w.r.t. the input. ReLU'(0) = 0;
/// max-pool ties route to the first element in row-major order.
GradientMap input_gradient(const Image& img, const BackboneParams& p, std::size_t d);

/// Same as input_gradient for several channels, sharing one forward pass and
/// one batched backward pass.
std::vector<GradientMap> input_gradients(const Image& img, const BackboneParams& p,
                                         std::span<const std::size_t> channels);

struct TrainConfig {
  std::size_t epochs = 20;
  double learning_rate = 1e-3;
  std::size_t batch_size = 16;
  double momentum = 0.9;
  std::uint64_t seed = 0;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct TrainReport {
  BackboneParams params;
  /// Mean training cross-entropy; entry 0 is before the first update, entry e after epoch e.
  std::vector<double> loss_curve;
};

/// Mini-batch SGD on softmax cross-entropy through a temporary linear head
/// over the pooled features. The head is discarded.
TrainReport train_backbone_report(std::span<const Image> images, std::span<const Label> labels,
                                  const BackboneParams& p0, const TrainConfig& cfg);

BackboneParams train_backbone(std::span<const Image> images, std::span<const Label> labels,
                              const BackboneParams& p0, const TrainConfig& cfg);

/// Writes "<stem>.arch.txt" (descriptor) and "<stem>.psf" (all weights, flat).
void save_backbone(const std::filesystem::path& stem, const BackboneParams& p);
BackboneParams load_backbone(const std::filesystem::path& stem);

struct PrecomputedBackbone {
  ChannelStack stack;
  std::vector<GradientMap> gradients;  // one per channel
};

/// Loads externally computed outputs: a [D,s,u] stack and [D,H,W,C] gradients.
PrecomputedBackbone load_precomputed(const std::filesystem::path& stack_path, const std::filesystem::path& grads_path,
                                     std::size_t feature_dim, std::size_t height, std::size_t width,
                                     std::size_t channels);

}  // namespace csparts
