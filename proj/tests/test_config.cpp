#include <filesystem>

#include "csparts/config.hpp"
#include "csparts/errors.hpp"
#include "doctest.h"

using namespace csparts;

TEST_CASE("defaults match the library defaults") {
  const RunConfig c;
  CHECK(c.pipeline() == PipelineConfig{});
  const auto s = c.synth();
  const SynthConfig d;
  CHECK(s.num_classes == d.num_classes);
  CHECK(s.train_per_class == d.train_per_class);
  CHECK(s.glyph_size == d.glyph_size);
  CHECK(s.clutter == d.clutter);
  CHECK(c.get("backbone.arch") == kDefaultArchitecture);
}

TEST_CASE("parse, override and canonical output") {
  auto c = RunConfig::parse("# comment\nseed = 7\nparts.threshold=otsu  # trailing\n\nselect.lambda=0.25\n");
  CHECK(c.get("seed") == "7");
  CHECK(c.pipeline().threshold == ThresholdMethod::Otsu);
  CHECK(c.pipeline().select_lambda == 0.25);
  CHECK(c.pipeline().seed == 7);
  CHECK(c.pipeline().train.seed == 7);
  CHECK(c.synth().seed == 7);

  c.set("parts.k=2");
  c.set("backbone.arch", "conv3:8   relu pool2 conv5:4");
  c.set("parts.cluster_weights", "1, 0.5,1,1,1,2");
  c.set("train.ablation=0");
  const auto p = c.pipeline();
  CHECK(p.k == 2);
  CHECK(p.architecture == "conv3:8 relu pool2 conv5:4");
  CHECK(p.cluster_weights[1] == 0.5);
  CHECK(p.cluster_weights[5] == 2.0);
  CHECK_FALSE(p.train_ablation);

  const auto text = c.to_string();
  CHECK(text.rfind("seed=7\n", 0) == 0);
  CHECK(text.find("parts.cluster_weights=1,0.5,1,1,1,2\n") != std::string::npos);
  const auto again = RunConfig::parse(text);
  CHECK(again.values() == c.values());
}

TEST_CASE("round trip through the typed configs") {
  SynthConfig s;
  s.num_classes = 5;
  s.clutter = 0.3;
  PipelineConfig p;
  p.final_lambda = 0.0125;
  p.boxes.mass_quantile = 0.9;
  p.seed = 3;
  p.train.seed = 3;
  p.threshold = ThresholdMethod::Otsu;
  const auto c = RunConfig::from(s, p);
  CHECK(c.pipeline() == p);
  CHECK(c.synth().num_classes == 5);
  CHECK(c.synth().clutter == 0.3);

  const auto path = std::filesystem::temp_directory_path() / "csparts_test_config.txt";
  c.save(path);
  CHECK(RunConfig::load(path).values() == c.values());
}

TEST_CASE("rejections") {
  RunConfig c;
  CHECK_THROWS_WITH_AS(c.set("parts.kk=3"), doctest::Contains("parts.kk"), ArgumentError);
  CHECK_THROWS_AS(c.set("parts.k=-1"), ArgumentError);
  CHECK_THROWS_AS(c.set("parts.k=2.5"), ArgumentError);
  CHECK_THROWS_AS(c.set("select.lambda=abc"), ArgumentError);
  CHECK_THROWS_AS(c.set("parts.threshold=median"), ArgumentError);
  CHECK_THROWS_AS(c.set("train.ablation=maybe"), ArgumentError);
  CHECK_THROWS_AS(c.set("parts.cluster_weights=1,1,1"), ArgumentError);
  CHECK_THROWS_AS(c.set("backbone.arch=conv3:8 gelu"), ArgumentError);
  CHECK_THROWS_AS(c.set("no equals sign"), ArgumentError);
  CHECK_THROWS_AS(RunConfig::parse("seed=1\njunk\n"), ArgumentError);
  CHECK_THROWS_AS(RunConfig::load("/nonexistent/csparts.cfg"), ArgumentError);
  CHECK(c.get("parts.k") == "4");  // unchanged after failed sets
}
