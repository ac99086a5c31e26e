#include <random>

#include <benchmark/benchmark.h>

#include "csparts/backbone.hpp"
#include "csparts/parts.hpp"
#include "csparts/saliency.hpp"
#include "csparts/sparse_linear.hpp"

using namespace csparts;

namespace {

Image noise_image(std::size_t side, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  std::vector<float> v(side * side * 3);
  for (auto& x : v) x = u(rng);
  return Image(side, side, 3, std::move(v));
}

void BM_Forward(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  const auto p = make_backbone(kDefaultArchitecture, side, side, 3, 0);
  const auto img = noise_image(side, 1);
  for (auto _ : state) benchmark::DoNotOptimize(forward(img, p));
}
BENCHMARK(BM_Forward)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_InputGradients(benchmark::State& state) {
  const auto p = make_backbone(kDefaultArchitecture, 64, 64, 3, 0);
  const auto img = noise_image(64, 2);
  std::vector<std::size_t> chans(static_cast<std::size_t>(state.range(0)));
  for (std::size_t i = 0; i < chans.size(); ++i) chans[i] = i;
  for (auto _ : state) benchmark::DoNotOptimize(input_gradients(img, p, chans));
}
BENCHMARK(BM_InputGradients)->Arg(1)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_FitOvrL1(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::normal_distribution<float> n01(0.0f, 1.0f);
  std::vector<FeatureVector> x;
  std::vector<Label> y;
  for (int i = 0; i < 320; ++i) {
    FeatureVector f(64);
    for (std::size_t j = 0; j < 64; ++j) f[j] = n01(rng) + (j % 8 == static_cast<std::size_t>(i % 8) ? 1.0f : 0.0f);
    x.push_back(std::move(f));
    y.push_back(i % 8);
  }
  for (auto _ : state) benchmark::DoNotOptimize(fit_ovr(x, y, Regularization::L1, 0.1));
}
BENCHMARK(BM_FitOvrL1)->Unit(benchmark::kMillisecond);

void BM_Saliency(benchmark::State& state) {
  const auto p = make_backbone(kDefaultArchitecture, 64, 64, 3, 0);
  const auto img = noise_image(64, 4);
  std::vector<std::size_t> chans(16);
  for (std::size_t i = 0; i < 16; ++i) chans[i] = i * 4;
  const auto grads = input_gradients(img, p, chans);
  for (auto _ : state) {
    const auto s = threshold(normalize(compute_saliency(grads)), ThresholdMethod::Mean);
    const auto peaks = find_peaks(s, 4, default_nms_radius(64, 64));
    benchmark::DoNotOptimize(boxes_from_clusters(cluster_pixels(s, img, peaks)));
  }
}
BENCHMARK(BM_Saliency)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
