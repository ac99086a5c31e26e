#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "csparts/grid.hpp"
#include "csparts/parts.hpp"

namespace csparts {

struct SynthConfig {
  std::size_t num_classes = 8;
  std::size_t train_per_class = 40;
  std::size_t test_per_class = 20;
  std::size_t image_size = 64;
  std::size_t glyph_size = 9;
  double clutter = 0.5;  // distractor density in [0,1]
  std::uint64_t seed = 0;
};

struct GlyphBox {
  std::size_t x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // inclusive

  friend bool operator==(const GlyphBox&, const GlyphBox&) = default;
};

struct SynthRecord {
  Image image;
  int label = 0;
  GlyphBox glyph;
  std::string id;

  friend bool operator==(const SynthRecord&, const SynthRecord&) = default;
};

struct SynthDataset {
  std::vector<SynthRecord> train;
  std::vector<SynthRecord> test;
};

void validate(const SynthConfig& cfg);

/// Maximum number of classes with distinct glyphs.
std::size_t max_synth_classes();

/// Textured background, class-independent distractors, and one class glyph
/// per image. Records are ordered by class then index.
SynthDataset generate(const SynthConfig& cfg);

/// The glyph stamp of a class: glyph_size^2 mask values in {0,1}, row-major.
std::vector<std::uint8_t> glyph_mask(int label, std::size_t glyph_size);

double box_iou(const PartBox& box, const GlyphBox& gt);
/// Best IoU over boxes; 0 for an empty list.
double localization_score(std::span<const PartBox> boxes, const GlyphBox& gt);

/// Writes PPM files plus manifest.csv (path,split,label,x0,y0,x1,y1).
void write_dataset(const std::filesystem::path& dir, const SynthDataset& ds);
SynthDataset read_dataset(const std::filesystem::path& dir);

}  // namespace csparts
