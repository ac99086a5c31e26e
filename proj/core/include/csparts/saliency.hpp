#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "csparts/backbone.hpp"
#include "csparts/grid.hpp"

namespace csparts {

struct SaliencyMap {
  Grid2D values;
  bool normalized = false;

  std::size_t rows() const noexcept { return values.rows(); }
  std::size_t cols() const noexcept { return values.cols(); }
};

struct SalientPixel {
  std::size_t x = 0;
  std::size_t y = 0;
  float value = 0.0f;

  friend bool operator==(const SalientPixel&, const SalientPixel&) = default;
};

/// Retained pixels after thresholding, in row-major order.
struct SparseSaliency {
  std::vector<SalientPixel> pixels;
  std::size_t rows = 0;
  std::size_t cols = 0;
  float threshold = 0.0f;
};

enum class ThresholdMethod { Mean, Otsu };

/// M(x,y) = mean over the given maps of max_c |g(x,y,c)|.
SaliencyMap compute_saliency(std::span<const GradientMap> grads);

/// Min-max scaling to [0,1]; constant maps become all-zero.
SaliencyMap normalize(const SaliencyMap& m);

struct OtsuResult {
  std::size_t bin = 0;            // pixels in bins > bin are retained
  double between_variance = 0.0;  // in bin-index units
};

inline constexpr std::size_t kOtsuBins = 256;

/// Bin of a normalized value: min(255, floor(256 v)).
std::size_t otsu_bin(float v);

/// Threshold bin maximizing between-class variance of the 256-bin histogram;
/// the smallest maximizing bin wins.
OtsuResult otsu_threshold(std::span<const float> values);

/// Mean keeps v >= mean; Otsu keeps pixels whose bin lies strictly above the
/// Otsu bin. An all-zero map yields an empty result.
SparseSaliency threshold(const SaliencyMap& m, ThresholdMethod method);

void write_saliency_pgm(const std::filesystem::path& path, const SaliencyMap& m);
void write_saliency_tensor(const std::filesystem::path& path, const SaliencyMap& m);

}  // namespace csparts
