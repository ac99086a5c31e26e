#pragma once

// Finite-difference check of input_gradient against the double-precision
// reference net. A sample is skipped when the +-h perturbation changes the
// network's piecewise-linear regime (some ReLU input or pool winner flips),
// i.e. when a kink lies within h of the evaluation point.

#include <algorithm>
#include <cmath>
#include <random>

#include "csparts/backbone.hpp"
#include "oracles.hpp"

namespace gradcheck {

struct Result {
  std::size_t checked = 0;
  std::size_t skipped = 0;
  double max_abs_error = 0.0;
};

inline Result check(const csparts::Image& img, const csparts::BackboneParams& p, std::size_t d, std::size_t samples,
                    double h, std::mt19937_64& rng) {
  Result r;
  const auto base = oracle::to_double(img);
  const auto ref = oracle::naive_forward(base, img.height(), img.width(), img.channels(), p);
  const auto grad = csparts::input_gradient(img, p, d);
  std::size_t attempts = 0;
  while (r.checked < samples && attempts < 40 * samples) {
    ++attempts;
    const std::size_t idx = rng() % base.size();
    auto plus = base, minus = base;
    plus[idx] += h;
    minus[idx] -= h;
    const auto fp = oracle::naive_forward(plus, img.height(), img.width(), img.channels(), p);
    const auto fm = oracle::naive_forward(minus, img.height(), img.width(), img.channels(), p);
    if (!(fp.pattern == ref.pattern) || !(fm.pattern == ref.pattern)) {
      ++r.skipped;
      continue;
    }
    const double fd = (fp.features[d] - fm.features[d]) / (2.0 * h);
    r.max_abs_error = std::max(r.max_abs_error, std::abs(fd - static_cast<double>(grad.data[idx])));
    ++r.checked;
  }
  return r;
}

}  // namespace gradcheck
