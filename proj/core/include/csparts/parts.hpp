#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <string_view>
#include <vector>

#include "csparts/grid.hpp"
#include "csparts/saliency.hpp"

namespace csparts {

struct Peak {
  std::size_t x = 0;
  std::size_t y = 0;
  float saliency = 0.0f;
  std::size_t rank = 0;  // 1-based, by descending saliency

  friend bool operator==(const Peak&, const Peak&) = default;
};

/// Default suppression radius: max(3, side / 8).
std::size_t default_nms_radius(std::size_t rows, std::size_t cols);

/// Greedy NMS over retained pixels with Chebyshev suppression.
std::vector<Peak> find_peaks(const SparseSaliency& s, std::size_t k, std::size_t radius);

inline constexpr std::size_t kClusterDims = 6;
using ClusterPoint = std::array<double, kClusterDims>;

struct ClusteredPixel {
  std::size_t x = 0;
  std::size_t y = 0;
  float saliency = 0.0f;
  float r = 0.0f, g = 0.0f, b = 0.0f;
  std::size_t cluster = 0;
};

struct ClusterAssignment {
  std::vector<ClusteredPixel> pixels;
  std::size_t cluster_count = 0;
  std::vector<ClusterPoint> centroids;
  std::vector<std::size_t> seed_rank;  // rank of the seeding peak per cluster
  std::size_t iterations = 0;
  double cost = 0.0;                   // final within-cluster weighted SSE
  std::size_t width = 0;
  std::size_t height = 0;
};

struct ClusterConfig {
  std::size_t max_iter = 100;
  /// Per-dimension weights on (x/width, y/height, saliency, r, g, b).
  std::array<double, kClusterDims> weights{1, 1, 1, 1, 1, 1};
  /// Called with the cost after every assignment and update step.
  std::function<void(double)> cost_observer;
};

/// Clustering coordinates of a retained pixel (unweighted).
ClusterPoint cluster_features(const SalientPixel& p, const Image& img);

/// Lloyd's algorithm seeded at the peaks. Empty clusters are reseeded at the
/// retained pixel farthest from all current centroids.
ClusterAssignment cluster_pixels(const SparseSaliency& s, const Image& img, const std::vector<Peak>& peaks,
                                 const ClusterConfig& cfg = {});

struct PartBox {
  std::size_t x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // inclusive
  std::size_t rank = 0;
  double recall = 0.0;

  std::size_t width() const noexcept { return x1 - x0 + 1; }
  std::size_t height() const noexcept { return y1 - y0 + 1; }
  std::size_t area() const noexcept { return width() * height(); }

  friend bool operator==(const PartBox&, const PartBox&) = default;
};

struct BoxConfig {
  double mass_quantile = 1.0;  // q in (0,1]
  std::size_t min_side = 8;

  friend bool operator==(const BoxConfig&, const BoxConfig&) = default;
};

/// One box per non-empty cluster, ordered by seed-peak rank. q = 1 gives the
/// tight box; q < 1 the smallest box holding at least q of the saliency mass.
std::vector<PartBox> boxes_from_clusters(const ClusterAssignment& a, const BoxConfig& cfg = {});

/// Grows a box to at least min_side per axis around its center, shifting it
/// back inside [0,width) x [0,height).
PartBox expand_box(PartBox box, std::size_t min_side, std::size_t width, std::size_t height);

/// CSV line: image_id,rank,x0,y0,x1,y1,recall
void write_box_csv_row(std::ostream& os, std::string_view image_id, const PartBox& box);
inline constexpr std::string_view kBoxCsvHeader = "image_id,rank,x0,y0,x1,y1,recall";

}  // namespace csparts
