#include <algorithm>
#include <cmath>

#include "csparts/errors.hpp"
#include "csparts/image_io.hpp"
#include "csparts/saliency.hpp"
#include "csparts/tensor_io.hpp"

namespace csparts {

SaliencyMap compute_saliency(std::span<const GradientMap> grads) {
  if (grads.empty()) throw ArgumentError("saliency needs at least one gradient map");
  const auto& first = grads.front();
  for (const auto& g : grads)
    if (g.height != first.height || g.width != first.width || g.channels != first.channels ||
        g.data.size() != first.height * first.width * first.channels)
      throw ArgumentError("gradient maps have mismatched dimensions");

  const std::size_t px = first.height * first.width, ch = first.channels;
  std::vector<float> out(px);
  std::vector<float> per_map(grads.size());
  for (std::size_t i = 0; i < px; ++i) {
    for (std::size_t d = 0; d < grads.size(); ++d) {
      float m = 0.0f;
      for (std::size_t c = 0; c < ch; ++c) m = std::max(m, std::abs(grads[d].data[i * ch + c]));
      per_map[d] = m;
    }
    // Sorted summation keeps the result independent of channel order.
    std::sort(per_map.begin(), per_map.end());
    double s = 0.0;
    for (float v : per_map) s += v;
    out[i] = static_cast<float>(s / static_cast<double>(grads.size()));
  }
  return {Grid2D(first.height, first.width, std::move(out)), false};
}

SaliencyMap normalize(const SaliencyMap& m) {
  const auto data = m.values.data();
  if (data.empty()) throw ArgumentError("cannot normalize an empty saliency map");
  for (float v : data)
    if (!(v >= 0.0f) || !std::isfinite(v)) throw ArgumentError("saliency values must be finite and >= 0");
  const auto [lo_it, hi_it] = std::minmax_element(data.begin(), data.end());
  const double lo = *lo_it, hi = *hi_it;
  SaliencyMap out{Grid2D(m.rows(), m.cols(), 0.0f), true};
  if (hi > lo) {
    auto dst = out.values.data();
    for (std::size_t i = 0; i < data.size(); ++i) dst[i] = static_cast<float>((data[i] - lo) / (hi - lo));
  }
  return out;
}

std::size_t otsu_bin(float v) {
  const auto b = static_cast<long>(std::floor(static_cast<double>(v) * static_cast<double>(kOtsuBins)));
  return static_cast<std::size_t>(std::clamp<long>(b, 0, static_cast<long>(kOtsuBins) - 1));
}

OtsuResult otsu_threshold(std::span<const float> values) {
  std::vector<double> hist(kOtsuBins, 0.0);
  for (float v : values) hist[otsu_bin(v)] += 1.0;
  const double total = static_cast<double>(values.size());
  double total_sum = 0.0;
  for (std::size_t b = 0; b < kOtsuBins; ++b) total_sum += static_cast<double>(b) * hist[b];

  OtsuResult best{kOtsuBins - 1, 0.0};
  double n0 = 0.0, s0 = 0.0;
  for (std::size_t t = 0; t + 1 < kOtsuBins; ++t) {
    n0 += hist[t];
    s0 += static_cast<double>(t) * hist[t];
    const double n1 = total - n0;
    if (n0 == 0.0 || n1 == 0.0) continue;
    const double diff = s0 / n0 - (total_sum - s0) / n1;
    const double var = n0 * n1 * diff * diff / (total * total);
    if (var > best.between_variance) best = {t, var};
  }
  return best;
}

SparseSaliency threshold(const SaliencyMap& m, ThresholdMethod method) {
  if (!m.normalized) throw ArgumentError("threshold requires a normalized saliency map");
  SparseSaliency s;
  s.rows = m.rows();
  s.cols = m.cols();
  const auto data = m.values.data();
  const bool all_zero = std::all_of(data.begin(), data.end(), [](float v) { return v == 0.0f; });
  if (all_zero) {
    s.threshold = 1.0f;
    return s;
  }

  auto keep = [&](auto&& pred) {
    for (std::size_t y = 0; y < s.rows; ++y)
      for (std::size_t x = 0; x < s.cols; ++x) {
        const float v = m.values(y, x);
        if (pred(v)) s.pixels.push_back({x, y, v});
      }
  };

  if (method == ThresholdMethod::Mean) {
    double sum = 0.0;
    for (float v : data) sum += v;
    const double mean = sum / static_cast<double>(data.size());
    s.threshold = static_cast<float>(mean);
    keep([&](float v) { return static_cast<double>(v) >= mean; });
  } else {
    const OtsuResult r = otsu_threshold(data);
    s.threshold = static_cast<float>(static_cast<double>(r.bin + 1) / static_cast<double>(kOtsuBins));
    keep([&](float v) { return otsu_bin(v) > r.bin; });
  }
  return s;
}

void write_saliency_pgm(const std::filesystem::path& path, const SaliencyMap& m) { write_pgm(path, m.values); }

void write_saliency_tensor(const std::filesystem::path& path, const SaliencyMap& m) {
  const std::uint64_t dims[2] = {m.rows(), m.cols()};
  write_tensor(path, dims, m.values.data());
}

}  // namespace csparts
