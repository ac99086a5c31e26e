#pragma once

// Independent reference implementations used as test oracles. Nothing here
// calls into the code paths it checks.

#include <array>
#include <cstdint>
#include <random>
#include <vector>

#include "csparts/backbone.hpp"
#include "csparts/grid.hpp"

namespace oracle {

/// Piecewise-linear regime of a network: the sign of every ReLU input and the
/// winner of every max-pool window.
struct Pattern {
  std::vector<std::uint8_t> relu;
  std::vector<std::uint32_t> pool;
  bool operator==(const Pattern&) const = default;
};

struct NaiveOutput {
  std::vector<double> features;  // global average pooled
  std::vector<std::vector<double>> maps;  // [d][r*cols + c]
  std::size_t rows = 0, cols = 0;
  Pattern pattern;
};

/// Per-layer loop implementation in double precision over a CHW tensor.
NaiveOutput naive_forward(const std::vector<double>& hwc, std::size_t h, std::size_t w, std::size_t c,
                          const csparts::BackboneParams& p);

std::vector<double> to_double(const csparts::Image& img);

csparts::Image random_image(std::mt19937_64& rng, std::size_t h, std::size_t w, std::size_t c);

/// Brute-force minimum of f over an axis-aligned grid [lo,hi]^2 with the given step.
struct GridMin {
  double value;
  double a, b;
};
template <typename F>
GridMin grid_min_2d(F&& f, double lo, double hi, double step) {
  GridMin best{f(lo, lo), lo, lo};
  const auto n = static_cast<long>((hi - lo) / step + 0.5);
  for (long i = 0; i <= n; ++i) {
    const double a = lo + static_cast<double>(i) * step;
    for (long j = 0; j <= n; ++j) {
      const double b = lo + static_cast<double>(j) * step;
      const double v = f(a, b);
      if (v < best.value) best = {v, a, b};
    }
  }
  return best;
}

/// Minimal within-cluster SSE over every assignment of points to k clusters
/// (k^n enumeration; empty clusters allowed), with per-dimension weights.
double exhaustive_kmeans_cost(const std::vector<std::array<double, 6>>& pts, std::size_t k,
                              const std::array<double, 6>& weights);

/// Between-class variance for each of the 256 split bins, computed directly
/// from the pixel list. Entry t splits bins <= t from bins > t.
std::vector<double> brute_force_otsu(const std::vector<float>& values);

}  // namespace oracle
