#include <algorithm>
#include <random>
#include <sstream>

#include "csparts/errors.hpp"
#include "csparts/parts.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace csparts;

namespace {

SparseSaliency sparse(std::size_t rows, std::size_t cols, std::vector<SalientPixel> px) {
  std::sort(px.begin(), px.end(), [](const SalientPixel& a, const SalientPixel& b) {
    return std::pair(a.y, a.x) < std::pair(b.y, b.x);
  });
  SparseSaliency s;
  s.rows = rows;
  s.cols = cols;
  s.pixels = std::move(px);
  return s;
}

SparseSaliency random_sparse(std::mt19937_64& rng, std::size_t side, double density) {
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  std::vector<SalientPixel> px;
  for (std::size_t y = 0; y < side; ++y)
    for (std::size_t x = 0; x < side; ++x)
      if (u(rng) < density) px.push_back({x, y, u(rng)});
  return sparse(side, side, px);
}

ClusterAssignment one_cluster(std::size_t w, std::size_t h, const std::vector<std::tuple<std::size_t, std::size_t, float>>& px) {
  ClusterAssignment a;
  a.cluster_count = 1;
  a.seed_rank = {1};
  a.width = w;
  a.height = h;
  for (auto [x, y, s] : px) a.pixels.push_back({x, y, s, 0, 0, 0, 0});
  a.centroids.resize(1);
  return a;
}

std::size_t chebyshev(const Peak& a, const Peak& b) {
  return std::max(a.x > b.x ? a.x - b.x : b.x - a.x, a.y > b.y ? a.y - b.y : b.y - a.y);
}

}  // namespace

TEST_CASE("find_peaks") {
  CHECK(default_nms_radius(64, 64) == 8);
  CHECK(default_nms_radius(16, 16) == 3);

  SUBCASE("disjoint peaks") {
    const auto s = sparse(16, 16, {{2, 2, 1.0f}, {10, 10, 0.8f}});
    const auto p = find_peaks(s, 2, 3);
    REQUIRE(p.size() == 2);
    CHECK(p[0] == Peak{2, 2, 1.0f, 1});
    CHECK(p[1] == Peak{10, 10, 0.8f, 2});
  }
  SUBCASE("suppression") {
    const auto p = find_peaks(sparse(16, 16, {{2, 2, 1.0f}, {3, 3, 0.9f}}), 2, 3);
    REQUIRE(p.size() == 1);
    CHECK(p[0].x == 2);
  }
  SUBCASE("ties prefer smaller y then smaller x") {
    const auto p = find_peaks(sparse(20, 20, {{15, 1, 0.5f}, {2, 9, 0.5f}, {4, 1, 0.5f}}), 3, 2);
    REQUIRE(p.size() == 3);
    CHECK(std::pair(p[0].x, p[0].y) == std::pair<std::size_t, std::size_t>(4, 1));
    CHECK(std::pair(p[1].x, p[1].y) == std::pair<std::size_t, std::size_t>(15, 1));
    CHECK(std::pair(p[2].x, p[2].y) == std::pair<std::size_t, std::size_t>(2, 9));
  }
  SUBCASE("empty input gives no peaks") { CHECK(find_peaks(sparse(8, 8, {}), 4, 3).empty()); }
  SUBCASE("errors") {
    CHECK_THROWS_AS(find_peaks(sparse(8, 8, {}), 0, 3), ArgumentError);
    CHECK_THROWS_AS(find_peaks(sparse(8, 8, {}), 2, 0), ArgumentError);
  }
  SUBCASE("randomized separation, ordering and scale invariance") {
    std::mt19937_64 rng(0);
    for (int t = 0; t < 20; ++t) {
      const auto s = random_sparse(rng, 32, 0.3);
      const std::size_t radius = 3 + static_cast<std::size_t>(t % 4);
      const auto p = find_peaks(s, 4, radius);
      CHECK(p.size() <= 4);
      for (std::size_t i = 0; i < p.size(); ++i) {
        CHECK(p[i].rank == i + 1);
        if (i > 0) CHECK(p[i].saliency <= p[i - 1].saliency);
        for (std::size_t j = 0; j < i; ++j) CHECK(chebyshev(p[i], p[j]) > radius);
      }
      auto scaled = s;
      for (auto& px : scaled.pixels) px.value *= 0.25f;
      const auto ps = find_peaks(scaled, 4, radius);
      REQUIRE(ps.size() == p.size());
      for (std::size_t i = 0; i < p.size(); ++i) {
        CHECK(ps[i].x == p[i].x);
        CHECK(ps[i].y == p[i].y);
        CHECK(ps[i].rank == p[i].rank);
      }
    }
  }
}

TEST_CASE("cluster_pixels") {
  SUBCASE("two separated blobs match the exhaustive optimum") {
    const Image img(16, 16, 3, 0.5f);
    std::vector<SalientPixel> px;
    for (std::size_t i = 0; i < 4; ++i) {
      px.push_back({1 + i % 2, 1 + i / 2, 0.9f});
      px.push_back({12 + i % 2, 12 + i / 2, 0.8f});
    }
    const auto s = sparse(16, 16, px);
    const std::vector<Peak> peaks{{1, 1, 0.9f, 1}, {12, 12, 0.8f, 2}};
    std::vector<double> costs;
    ClusterConfig cfg;
    cfg.cost_observer = [&](double c) { costs.push_back(c); };
    const auto a = cluster_pixels(s, img, peaks, cfg);
    CHECK(a.cluster_count == 2);
    for (const auto& p : a.pixels) CHECK(p.cluster == (p.x < 8 ? 0u : 1u));
    for (std::size_t i = 1; i < costs.size(); ++i) CHECK(costs[i] <= costs[i - 1] + 1e-12);

    std::vector<ClusterPoint> pts;
    for (const auto& p : s.pixels) pts.push_back(cluster_features(p, img));
    CHECK(a.cost == doctest::Approx(oracle::exhaustive_kmeans_cost(pts, 2, cfg.weights)).epsilon(1e-9));
  }
  SUBCASE("single peak") {
    std::mt19937_64 rng(1);
    const auto img = oracle::random_image(rng, 10, 10, 3);
    const auto s = random_sparse(rng, 10, 0.5);
    const auto a = cluster_pixels(s, img, {Peak{s.pixels[0].x, s.pixels[0].y, s.pixels[0].value, 1}});
    CHECK(a.pixels.size() == s.pixels.size());
    for (const auto& p : a.pixels) CHECK(p.cluster == 0);
  }
  SUBCASE("pixels at the peaks only") {
    std::mt19937_64 rng(2);
    const auto img = oracle::random_image(rng, 12, 12, 3);
    const auto s = sparse(12, 12, {{1, 1, 1.0f}, {9, 2, 0.7f}, {4, 10, 0.6f}});
    const auto peaks = find_peaks(s, 3, 3);
    REQUIRE(peaks.size() == 3);
    const auto a = cluster_pixels(s, img, peaks);
    for (const auto& p : a.pixels) {
      const auto k = p.cluster;
      CHECK(peaks[k].x == p.x);
      CHECK(peaks[k].y == p.y);
    }
    CHECK(a.cost == 0.0);
  }
  SUBCASE("features and determinism") {
    std::mt19937_64 rng(3);
    const auto img = oracle::random_image(rng, 32, 32, 3);
    const auto s = random_sparse(rng, 32, 0.2);
    const auto f = cluster_features(s.pixels[3], img);
    CHECK(f[0] == doctest::Approx(static_cast<double>(s.pixels[3].x) / 32.0));
    CHECK(f[2] == doctest::Approx(s.pixels[3].value));
    CHECK(f[4] == doctest::Approx(img.at(s.pixels[3].y, s.pixels[3].x, 1)));
    const auto peaks = find_peaks(s, 4, 4);
    const auto a = cluster_pixels(s, img, peaks), b = cluster_pixels(s, img, peaks);
    CHECK(a.cluster_count == std::min<std::size_t>(4, peaks.size()));
    REQUIRE(a.pixels.size() == b.pixels.size());
    for (std::size_t i = 0; i < a.pixels.size(); ++i) CHECK(a.pixels[i].cluster == b.pixels[i].cluster);
    CHECK(a.cost == b.cost);
    for (const auto& c : a.centroids)
      for (double v : c) CHECK(std::isfinite(v));
  }
  SUBCASE("errors") {
    const Image img(8, 8, 3);
    CHECK_THROWS_AS(cluster_pixels(sparse(8, 8, {}), img, {Peak{0, 0, 1.0f, 1}}), ArgumentError);
    CHECK_THROWS_AS(cluster_pixels(sparse(8, 8, {{1, 1, 1.0f}}), img, {}), ArgumentError);
    CHECK_THROWS_AS(cluster_pixels(sparse(8, 8, {{1, 1, 1.0f}}), img, {Peak{2, 2, 1.0f, 1}}), ArgumentError);
  }
}

TEST_CASE("boxes_from_clusters") {
  SUBCASE("tight box") {
    const auto a = one_cluster(64, 64, {{2, 3, 1.0f}, {5, 7, 0.5f}, {4, 4, 0.7f}});
    BoxConfig cfg;
    cfg.min_side = 1;
    const auto b = boxes_from_clusters(a, cfg);
    REQUIRE(b.size() == 1);
    CHECK(b[0] == PartBox{2, 3, 5, 7, 1, 1.0});
  }
  SUBCASE("corner clamp to the minimum side") {
    const auto b = boxes_from_clusters(one_cluster(64, 64, {{0, 0, 1.0f}}));
    REQUIRE(b.size() == 1);
    CHECK(b[0] == PartBox{0, 0, 7, 7, 1, 1.0});
  }
  SUBCASE("expand_box centers and shifts inside") {
    CHECK(expand_box({30, 30, 31, 31, 1, 0}, 8, 64, 64) == PartBox{27, 27, 34, 34, 1, 0});
    CHECK(expand_box({62, 10, 63, 10, 1, 0}, 8, 64, 64) == PartBox{56, 7, 63, 14, 1, 0});
    CHECK(expand_box({0, 0, 2, 2, 1, 0}, 8, 5, 5) == PartBox{0, 0, 4, 4, 1, 0});
  }
  SUBCASE("mass quantile drops an outlier") {
    std::vector<std::tuple<std::size_t, std::size_t, float>> px;
    for (std::size_t y = 10; y < 14; ++y)
      for (std::size_t x = 10; x < 15; ++x) px.emplace_back(x, y, 1.0f);
    px.emplace_back(44, 10, 1.0f);
    BoxConfig cfg;
    cfg.mass_quantile = 0.95;
    cfg.min_side = 1;
    const auto b = boxes_from_clusters(one_cluster(64, 64, px), cfg);
    REQUIRE(b.size() == 1);
    CHECK(b[0] == PartBox{10, 10, 14, 13, 1, 20.0 / 21.0});
  }
  SUBCASE("mass quantile matches a brute-force scan") {
    std::mt19937_64 rng(5);
    for (int t = 0; t < 25; ++t) {
      std::vector<std::tuple<std::size_t, std::size_t, float>> px;
      for (int i = 0; i < 12; ++i)
        px.emplace_back(rng() % 20, rng() % 20, static_cast<float>(1 + rng() % 4) / 4.0f);
      std::sort(px.begin(), px.end());
      px.erase(std::unique(px.begin(), px.end(), [](auto& a, auto& b) {
                 return std::get<0>(a) == std::get<0>(b) && std::get<1>(a) == std::get<1>(b);
               }), px.end());
      const double q = 0.5 + 0.1 * (t % 5);
      double total = 0.0;
      for (auto& [x, y, s] : px) total += s;
      std::size_t best_area = 1u << 30;
      PartBox best;
      for (std::size_t x0 = 0; x0 < 20; ++x0)
        for (std::size_t y0 = 0; y0 < 20; ++y0)
          for (std::size_t x1 = x0; x1 < 20; ++x1)
            for (std::size_t y1 = y0; y1 < 20; ++y1) {
              double m = 0.0;
              for (auto& [x, y, s] : px)
                if (x >= x0 && x <= x1 && y >= y0 && y <= y1) m += s;
              const std::size_t area = (x1 - x0 + 1) * (y1 - y0 + 1);
              if (m >= q * total * (1.0 - 1e-12) && area < best_area) {
                best_area = area;
                best = {x0, y0, x1, y1, 1, 0.0};
              }
            }
      BoxConfig cfg;
      cfg.mass_quantile = q;
      cfg.min_side = 1;
      const auto b = boxes_from_clusters(one_cluster(20, 20, px), cfg);
      REQUIRE(b.size() == 1);
      CHECK(b[0].area() == best_area);
      CHECK(b[0].x0 == best.x0);
      CHECK(b[0].y0 == best.y0);
    }
  }
  SUBCASE("ordering by seed rank and empty clusters") {
    ClusterAssignment a;
    a.cluster_count = 3;
    a.seed_rank = {2, 3, 1};
    a.width = a.height = 32;
    a.pixels = {{1, 1, 1, 0, 0, 0, 0}, {20, 20, 1, 0, 0, 0, 2}};
    const auto b = boxes_from_clusters(a);
    REQUIRE(b.size() == 2);
    CHECK(b[0].rank == 1);
    CHECK(b[1].rank == 2);
  }
  SUBCASE("errors") {
    const auto a = one_cluster(8, 8, {{1, 1, 1.0f}});
    BoxConfig cfg;
    cfg.mass_quantile = 0.0;
    CHECK_THROWS_AS(boxes_from_clusters(a, cfg), ArgumentError);
    cfg.mass_quantile = 1.5;
    CHECK_THROWS_AS(boxes_from_clusters(a, cfg), ArgumentError);
  }
  SUBCASE("end to end recall and bounds") {
    std::mt19937_64 rng(6);
    for (int t = 0; t < 10; ++t) {
      const auto img = oracle::random_image(rng, 24, 24, 3);
      const auto s = random_sparse(rng, 24, 0.25);
      const auto a = cluster_pixels(s, img, find_peaks(s, 4, 3));
      for (const auto& b : boxes_from_clusters(a)) {
        CHECK(b.recall == 1.0);
        CHECK(b.x1 < 24);
        CHECK(b.y1 < 24);
        CHECK(b.width() >= 8);
        CHECK(b.height() >= 8);
      }
    }
  }
}

TEST_CASE("box csv row") {
  std::ostringstream os;
  write_box_csv_row(os, "test_00003", PartBox{1, 2, 9, 10, 2, 1.0});
  CHECK(os.str() == "test_00003,2,1,2,9,10,1.000000\n");
}
