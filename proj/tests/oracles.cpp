#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace oracle {

NaiveOutput naive_forward(const std::vector<double>& hwc, std::size_t h, std::size_t w, std::size_t c,
                          const csparts::BackboneParams& p) {
  // t[ch][y][x]
  std::vector<double> t(c * h * w);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t ch = 0; ch < c; ++ch) t[(ch * h + y) * w + x] = hwc[(y * w + x) * c + ch];

  NaiveOutput out;
  std::size_t conv = 0;
  for (const auto& layer : p.layers) {
    if (layer.kind == csparts::LayerSpec::Kind::Conv) {
      const auto& cw = p.convs[conv++];
      const long k = static_cast<long>(cw.kernel), pad = k / 2;
      std::vector<double> o(cw.out_channels * h * w);
      for (std::size_t oc = 0; oc < cw.out_channels; ++oc)
        for (long y = 0; y < static_cast<long>(h); ++y)
          for (long x = 0; x < static_cast<long>(w); ++x) {
            double s = cw.bias[oc];
            for (std::size_t ic = 0; ic < cw.in_channels; ++ic)
              for (long ky = 0; ky < k; ++ky)
                for (long kx = 0; kx < k; ++kx) {
                  const long sy = y + ky - pad, sx = x + kx - pad;
                  if (sy < 0 || sx < 0 || sy >= static_cast<long>(h) || sx >= static_cast<long>(w)) continue;
                  const double wt = cw.weight[((oc * cw.in_channels + ic) * cw.kernel + static_cast<std::size_t>(ky)) *
                                                  cw.kernel +
                                              static_cast<std::size_t>(kx)];
                  s += wt * t[(ic * h + static_cast<std::size_t>(sy)) * w + static_cast<std::size_t>(sx)];
                }
            o[(oc * h + static_cast<std::size_t>(y)) * w + static_cast<std::size_t>(x)] = s;
          }
      t = std::move(o);
      c = cw.out_channels;
    } else if (layer.kind == csparts::LayerSpec::Kind::Relu) {
      for (double& v : t) {
        out.pattern.relu.push_back(v > 0.0);
        v = v > 0.0 ? v : 0.0;
      }
    } else {
      const std::size_t oh = h / 2, ow = w / 2;
      std::vector<double> o(c * oh * ow);
      for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t y = 0; y < oh; ++y)
          for (std::size_t x = 0; x < ow; ++x) {
            double best = -std::numeric_limits<double>::infinity();
            std::uint32_t arg = 0;
            for (std::uint32_t i = 0; i < 4; ++i) {
              const double v = t[(ch * h + 2 * y + i / 2) * w + 2 * x + i % 2];
              if (v > best) {
                best = v;
                arg = i;
              }
            }
            o[(ch * oh + y) * ow + x] = best;
            out.pattern.pool.push_back(arg);
          }
      t = std::move(o);
      h = oh;
      w = ow;
    }
  }
  out.rows = h;
  out.cols = w;
  out.maps.resize(c);
  out.features.resize(c);
  for (std::size_t d = 0; d < c; ++d) {
    out.maps[d].assign(t.begin() + static_cast<long>(d * h * w), t.begin() + static_cast<long>((d + 1) * h * w));
    double s = 0.0;
    for (double v : out.maps[d]) s += v;
    out.features[d] = s / static_cast<double>(h * w);
  }
  return out;
}

std::vector<double> to_double(const csparts::Image& img) {
  return {img.data().begin(), img.data().end()};
}

csparts::Image random_image(std::mt19937_64& rng, std::size_t h, std::size_t w, std::size_t c) {
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  std::vector<float> data(h * w * c);
  for (auto& v : data) v = u(rng);
  return csparts::Image(h, w, c, std::move(data));
}

double exhaustive_kmeans_cost(const std::vector<std::array<double, 6>>& pts, std::size_t k,
                              const std::array<double, 6>& weights) {
  const std::size_t n = pts.size();
  std::vector<std::size_t> label(n, 0);
  double best = std::numeric_limits<double>::infinity();
  while (true) {
    double cost = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      std::array<double, 6> mean{};
      std::size_t cnt = 0;
      for (std::size_t i = 0; i < n; ++i)
        if (label[i] == c) {
          ++cnt;
          for (int j = 0; j < 6; ++j) mean[j] += pts[i][j];
        }
      if (cnt == 0) continue;
      for (auto& m : mean) m /= static_cast<double>(cnt);
      for (std::size_t i = 0; i < n; ++i)
        if (label[i] == c)
          for (int j = 0; j < 6; ++j) cost += weights[j] * (pts[i][j] - mean[j]) * (pts[i][j] - mean[j]);
    }
    best = std::min(best, cost);
    std::size_t pos = 0;
    while (pos < n && ++label[pos] == k) label[pos++] = 0;
    if (pos == n) break;
  }
  return best;
}

std::vector<double> brute_force_otsu(const std::vector<float>& values) {
  std::vector<int> bins;
  for (float v : values) bins.push_back(std::min(255, static_cast<int>(std::floor(static_cast<double>(v) * 256.0))));
  std::vector<double> out(256, 0.0);
  const double n = static_cast<double>(values.size());
  for (int t = 0; t < 256; ++t) {
    double n0 = 0, n1 = 0, m0 = 0, m1 = 0;
    for (int b : bins) {
      if (b <= t) {
        n0 += 1;
        m0 += b;
      } else {
        n1 += 1;
        m1 += b;
      }
    }
    if (n0 == 0 || n1 == 0) continue;
    m0 /= n0;
    m1 /= n1;
    out[static_cast<std::size_t>(t)] = (n0 / n) * (n1 / n) * (m0 - m1) * (m0 - m1);
  }
  return out;
}

}  // namespace oracle
