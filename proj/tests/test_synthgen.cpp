#include <filesystem>
#include <set>

#include "csparts/errors.hpp"
#include "csparts/sparse_linear.hpp"
#include "csparts/synthgen.hpp"
#include "doctest.h"

using namespace csparts;

TEST_CASE("generate basics") {
  SynthConfig cfg;
  cfg.num_classes = 2;
  cfg.train_per_class = 1;
  cfg.test_per_class = 1;
  const auto ds = generate(cfg);
  REQUIRE(ds.train.size() == 2);
  REQUIRE(ds.test.size() == 2);
  CHECK(ds.train[0].label == 0);
  CHECK(ds.train[1].label == 1);
  CHECK(glyph_mask(0, 9) != glyph_mask(1, 9));
  CHECK(ds.train[0].id == "train_00000");
  CHECK(ds.test[1].id == "test_00001");
  CHECK_FALSE(ds.train[0].image == ds.test[0].image);
}

TEST_CASE("determinism and seeds") {
  SynthConfig cfg;
  cfg.num_classes = 4;
  cfg.train_per_class = 3;
  cfg.test_per_class = 2;
  const auto a = generate(cfg), b = generate(cfg);
  CHECK(a.train == b.train);
  CHECK(a.test == b.test);
  cfg.seed = 1;
  CHECK_FALSE(generate(cfg).train == a.train);
}

TEST_CASE("glyph patterns are distinct") {
  std::set<std::vector<std::uint8_t>> seen;
  for (std::size_t c = 0; c < max_synth_classes(); ++c) {
    const auto m = glyph_mask(static_cast<int>(c), 9);
    CHECK(m.size() == 81);
    seen.insert(m);
  }
  CHECK(seen.size() == max_synth_classes());
  CHECK_THROWS_AS(glyph_mask(static_cast<int>(max_synth_classes()), 9), ArgumentError);
}

TEST_CASE("record invariants and class balance") {
  SynthConfig cfg;  // defaults: 8 classes, 40/20 per class
  const auto ds = generate(cfg);
  CHECK(ds.train.size() == 320);
  CHECK(ds.test.size() == 160);
  std::vector<std::size_t> count(8, 0);
  std::set<std::string> ids;
  for (const auto* split : {&ds.train, &ds.test})
    for (const auto& r : *split) {
      ids.insert(r.id);
      REQUIRE(r.label >= 0);
      REQUIRE(r.label < 8);
      if (split == &ds.train) ++count[static_cast<std::size_t>(r.label)];
      CHECK(r.glyph.x1 - r.glyph.x0 + 1 == 9);
      CHECK(r.glyph.y1 - r.glyph.y0 + 1 == 9);
      CHECK(r.glyph.x1 < 64);
      CHECK(r.glyph.y1 < 64);
      for (float v : r.image.data()) CHECK((v >= 0.0f && v <= 1.0f));
    }
  for (auto c : count) CHECK(c == 40);
  CHECK(ids.size() == 480);

  SUBCASE("background statistics do not depend on the class") {
    std::vector<double> mean(8, 0.0), n(8, 0.0);
    for (const auto& r : ds.train) {
      const auto c = static_cast<std::size_t>(r.label);
      for (std::size_t y = 0; y < 64; ++y)
        for (std::size_t x = 0; x < 64; ++x) {
          if (x >= r.glyph.x0 && x <= r.glyph.x1 && y >= r.glyph.y0 && y <= r.glyph.y1) continue;
          for (std::size_t ch = 0; ch < 3; ++ch) mean[c] += r.image.at(y, x, ch);
          n[c] += 3;
        }
    }
    for (std::size_t c = 0; c < 8; ++c) mean[c] /= n[c];
    const auto [lo, hi] = std::minmax_element(mean.begin(), mean.end());
    CHECK(*hi - *lo < 0.03);
  }

  SUBCASE("the glyph crop carries the class") {
    auto crop_features = [](const SynthRecord& r) {
      const Image c = r.image.crop(r.glyph.x0, r.glyph.y0, r.glyph.x1, r.glyph.y1);
      return FeatureVector(c.data().begin(), c.data().end());
    };
    std::vector<FeatureVector> x;
    std::vector<Label> y;
    for (const auto& r : ds.train) {
      x.push_back(crop_features(r));
      y.push_back(r.label);
    }
    const auto m = fit_ovr(x, y, Regularization::L2, 1.0);
    std::size_t correct = 0;
    for (const auto& r : ds.test) correct += predict(m, crop_features(r)).label == static_cast<std::size_t>(r.label);
    const double acc = static_cast<double>(correct) / static_cast<double>(ds.test.size());
    MESSAGE("glyph-crop accuracy " << acc);
    CHECK(acc >= 5.0 / 8.0);
  }
}

TEST_CASE("validation") {
  SynthConfig cfg;
  cfg.glyph_size = 16;
  CHECK_THROWS_AS(generate(cfg), ArgumentError);
  cfg = {};
  cfg.num_classes = 1;
  CHECK_THROWS_AS(validate(cfg), ArgumentError);
  cfg = {};
  cfg.num_classes = max_synth_classes() + 1;
  CHECK_THROWS_AS(validate(cfg), ArgumentError);
  cfg = {};
  cfg.test_per_class = 0;
  CHECK_THROWS_AS(validate(cfg), ArgumentError);
  cfg = {};
  cfg.clutter = 1.5;
  CHECK_THROWS_AS(validate(cfg), ArgumentError);
  cfg = {};
  cfg.glyph_size = 15;
  CHECK_NOTHROW(validate(cfg));
}

TEST_CASE("localization score") {
  const GlyphBox gt{10, 10, 18, 18};
  const PartBox same{10, 10, 18, 18, 1, 1.0};
  const PartBox far{40, 40, 50, 50, 2, 1.0};
  const PartBox whole{0, 0, 63, 63, 3, 1.0};
  CHECK(box_iou(same, gt) == 1.0);
  CHECK(box_iou(far, gt) == 0.0);
  CHECK(box_iou(whole, gt) == doctest::Approx(81.0 / 4096.0));
  const PartBox boxes[] = {far, whole};
  CHECK(localization_score(boxes, gt) == doctest::Approx(81.0 / 4096.0));
  CHECK(localization_score(std::span<const PartBox>{}, gt) == 0.0);
  const PartBox half{14, 10, 22, 18, 1, 1.0};
  CHECK(box_iou(half, gt) == doctest::Approx(45.0 / 117.0));
}

TEST_CASE("dataset round trip") {
  SynthConfig cfg;
  cfg.num_classes = 3;
  cfg.train_per_class = 2;
  cfg.test_per_class = 2;
  cfg.seed = 9;
  const auto ds = generate(cfg);
  const auto dir = std::filesystem::temp_directory_path() / "csparts_test_synth";
  std::filesystem::remove_all(dir);
  write_dataset(dir, ds);
  CHECK(std::filesystem::exists(dir / "manifest.csv"));
  const auto back = read_dataset(dir);
  REQUIRE(back.train.size() == ds.train.size());
  REQUIRE(back.test.size() == ds.test.size());
  for (std::size_t i = 0; i < ds.train.size(); ++i) {
    CHECK(back.train[i].label == ds.train[i].label);
    CHECK(back.train[i].glyph == ds.train[i].glyph);
    CHECK(back.train[i].id == ds.train[i].id);
    // 8-bit quantization
    for (std::size_t j = 0; j < ds.train[i].image.data().size(); ++j)
      CHECK(std::abs(back.train[i].image.data()[j] - ds.train[i].image.data()[j]) <= 0.5f / 255.0f + 1e-6f);
  }
  CHECK_THROWS_AS(read_dataset(dir / "nowhere"), FormatError);
}
