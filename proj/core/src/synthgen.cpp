#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "csparts/errors.hpp"
#include "csparts/image_io.hpp"
#include "csparts/synthgen.hpp"
#include "rng.hpp"

namespace csparts {

namespace {

using Color = std::array<float, 3>;

constexpr std::array<Color, 10> kPalette = {{
    {0.90f, 0.10f, 0.10f},
    {0.10f, 0.70f, 0.15f},
    {0.15f, 0.25f, 0.90f},
    {0.95f, 0.80f, 0.10f},
    {0.80f, 0.15f, 0.80f},
    {0.10f, 0.80f, 0.85f},
    {0.95f, 0.50f, 0.05f},
    {0.05f, 0.05f, 0.05f},
    {0.55f, 0.30f, 0.10f},
    {0.98f, 0.98f, 0.98f},
}};

constexpr std::size_t kGlyphPatterns = 10;

void blend(Image& img, std::size_t y, std::size_t x, const Color& c, float alpha = 1.0f) {
  for (std::size_t ch = 0; ch < 3; ++ch) img.at(y, x, ch) = (1.0f - alpha) * img.at(y, x, ch) + alpha * c[ch];
}

void draw_background(Image& img, detail::Rng& rng) {
  const std::size_t S = img.height();
  Color a, b;
  for (auto& v : a) v = static_cast<float>(rng.uniform(0.45, 0.75));
  for (auto& v : b) v = static_cast<float>(rng.uniform(0.45, 0.75));
  const double fx = rng.uniform(0.5, 3.0), fy = rng.uniform(0.5, 3.0), phase = rng.uniform(0.0, 6.283185307179586);
  for (std::size_t y = 0; y < S; ++y)
    for (std::size_t x = 0; x < img.width(); ++x) {
      const double u = static_cast<double>(x) / static_cast<double>(img.width());
      const double v = static_cast<double>(y) / static_cast<double>(S);
      const double t = 0.5 + 0.5 * std::sin(6.283185307179586 * (fx * u + fy * v) + phase);
      for (std::size_t ch = 0; ch < 3; ++ch) {
        const double noise = rng.uniform(-0.04, 0.04);
        img.at(y, x, ch) = static_cast<float>(std::clamp((1.0 - t) * a[ch] + t * b[ch] + noise, 0.0, 1.0));
      }
    }
}

constexpr float kDistractorAlpha = 0.6f;

Color distractor_color(detail::Rng& rng) {
  if (rng.chance(0.6)) return kPalette[rng.below(kPalette.size())];
  return {static_cast<float>(rng.uniform()), static_cast<float>(rng.uniform()), static_cast<float>(rng.uniform())};
}

void draw_distractors(Image& img, double clutter, detail::Rng& rng) {
  const std::size_t S = img.height(), W = img.width();
  const auto count = static_cast<std::size_t>(std::lround(clutter * 14.0));
  for (std::size_t i = 0; i < count; ++i) {
    const Color c = distractor_color(rng);
    const std::size_t kind = rng.below(3);
    const double cx = rng.uniform(0.0, static_cast<double>(W)), cy = rng.uniform(0.0, static_cast<double>(S));
    if (kind == 0) {  // filled rectangle
      const double hw = rng.uniform(1.5, 6.0), hh = rng.uniform(1.5, 6.0);
      for (std::size_t y = 0; y < S; ++y)
        for (std::size_t x = 0; x < W; ++x)
          if (std::abs(static_cast<double>(x) - cx) <= hw && std::abs(static_cast<double>(y) - cy) <= hh)
            blend(img, y, x, c, kDistractorAlpha);
    } else if (kind == 1) {  // filled disc
      const double r = rng.uniform(1.5, 5.5);
      for (std::size_t y = 0; y < S; ++y)
        for (std::size_t x = 0; x < W; ++x) {
          const double dx = static_cast<double>(x) - cx, dy = static_cast<double>(y) - cy;
          if (dx * dx + dy * dy <= r * r) blend(img, y, x, c, kDistractorAlpha);
        }
    } else {  // line segment
      const double angle = rng.uniform(0.0, 3.141592653589793), len = rng.uniform(6.0, 20.0);
      const double dx = std::cos(angle), dy = std::sin(angle);
      for (int s = -static_cast<int>(len / 2); s <= static_cast<int>(len / 2); ++s) {
        const long x = std::lround(cx + s * dx), y = std::lround(cy + s * dy);
        if (x >= 0 && y >= 0 && x < static_cast<long>(W) && y < static_cast<long>(S))
          blend(img, static_cast<std::size_t>(y), static_cast<std::size_t>(x), c, kDistractorAlpha);
      }
    }
  }
}

}  // namespace

std::size_t max_synth_classes() { return std::min(kGlyphPatterns, kPalette.size()); }

std::vector<std::uint8_t> glyph_mask(int label, std::size_t g) {
  if (label < 0 || static_cast<std::size_t>(label) >= kGlyphPatterns) throw ArgumentError("no glyph for label");
  std::vector<std::uint8_t> m(g * g, 0);
  const long c = static_cast<long>(g) / 2, last = static_cast<long>(g) - 1;
  for (long y = 0; y < static_cast<long>(g); ++y)
    for (long x = 0; x < static_cast<long>(g); ++x) {
      bool on = false;
      switch (label) {
        case 0: on = y % 2 == 0; break;                                   // horizontal bars
        case 1: on = x % 2 == 0; break;                                   // vertical bars
        case 2: on = std::abs(x - c) <= 1 || std::abs(y - c) <= 1; break;  // plus
        case 3: {                                                          // ring
          const double r = std::hypot(static_cast<double>(x - c), static_cast<double>(y - c));
          on = r >= static_cast<double>(c) - 1.2 && r <= static_cast<double>(c) + 0.3;
          break;
        }
        case 4: on = x % 2 == 0 && y % 2 == 0; break;                     // dot grid
        case 5: on = x == y || x == last - y; break;                      // X
        case 6: on = x == 0 || y == 0 || x == last || y == last; break;   // square outline
        case 7: on = (x + y) % 2 == 0; break;                             // checkerboard
        case 8: on = (x + y) % 3 == 0; break;                             // diagonal stripes
        case 9: on = std::abs(x - c) + std::abs(y - c) <= c; break;       // diamond
      }
      m[static_cast<std::size_t>(y) * g + static_cast<std::size_t>(x)] = on ? 1 : 0;
    }
  return m;
}

void validate(const SynthConfig& cfg) {
  if (cfg.num_classes < 2 || cfg.num_classes > max_synth_classes())
    throw ArgumentError("num_classes must be in [2, " + std::to_string(max_synth_classes()) + "]");
  if (cfg.train_per_class == 0 || cfg.test_per_class == 0) throw ArgumentError("per-class image counts must be >= 1");
  if (cfg.glyph_size == 0 || cfg.image_size == 0) throw ArgumentError("image and glyph sizes must be positive");
  if (cfg.glyph_size * 4 >= cfg.image_size)
    throw ArgumentError("glyph size " + std::to_string(cfg.glyph_size) + " too large for placement in a " +
                        std::to_string(cfg.image_size) + " pixel image (must be < size/4)");
  if (!(cfg.clutter >= 0.0 && cfg.clutter <= 1.0)) throw ArgumentError("clutter must be in [0,1]");
}

SynthDataset generate(const SynthConfig& cfg) {
  validate(cfg);
  SynthDataset ds;
  const std::size_t S = cfg.image_size, G = cfg.glyph_size;
  auto make_split = [&](std::size_t per_class, std::uint64_t split, const char* prefix) {
    std::vector<SynthRecord> out;
    std::size_t index = 0;
    for (std::size_t label = 0; label < cfg.num_classes; ++label) {
      const auto mask = glyph_mask(static_cast<int>(label), G);
      for (std::size_t i = 0; i < per_class; ++i, ++index) {
        // Scene and glyph placement draw from streams keyed by split and index only.
        detail::Rng scene(detail::mix_seed(cfg.seed, (split << 32) | (2 * index)));
        detail::Rng place(detail::mix_seed(cfg.seed, (split << 32) | (2 * index + 1)));
        Image img(S, S, 3);
        draw_background(img, scene);
        draw_distractors(img, cfg.clutter, scene);

        const std::size_t x0 = place.below(S - G + 1), y0 = place.below(S - G + 1);
        const Color& c = kPalette[label];
        for (std::size_t y = 0; y < G; ++y)
          for (std::size_t x = 0; x < G; ++x)
            if (mask[y * G + x]) blend(img, y0 + y, x0 + x, c);

        char id[32];
        std::snprintf(id, sizeof id, "%s_%05zu", prefix, index);
        out.push_back({std::move(img), static_cast<int>(label), {x0, y0, x0 + G - 1, y0 + G - 1}, id});
      }
    }
    return out;
  };
  ds.train = make_split(cfg.train_per_class, 1, "train");
  ds.test = make_split(cfg.test_per_class, 2, "test");
  return ds;
}

double box_iou(const PartBox& box, const GlyphBox& gt) {
  const long ix0 = static_cast<long>(std::max(box.x0, gt.x0)), ix1 = static_cast<long>(std::min(box.x1, gt.x1));
  const long iy0 = static_cast<long>(std::max(box.y0, gt.y0)), iy1 = static_cast<long>(std::min(box.y1, gt.y1));
  const double inter = ix1 < ix0 || iy1 < iy0 ? 0.0 : static_cast<double>((ix1 - ix0 + 1) * (iy1 - iy0 + 1));
  const double gt_area = static_cast<double>((gt.x1 - gt.x0 + 1) * (gt.y1 - gt.y0 + 1));
  return inter / (static_cast<double>(box.area()) + gt_area - inter);
}

double localization_score(std::span<const PartBox> boxes, const GlyphBox& gt) {
  double best = 0.0;
  for (const auto& b : boxes) best = std::max(best, box_iou(b, gt));
  return best;
}

void write_dataset(const std::filesystem::path& dir, const SynthDataset& ds) {
  std::filesystem::create_directories(dir / "train");
  std::filesystem::create_directories(dir / "test");
  std::ofstream manifest(dir / "manifest.csv", std::ios::binary);
  if (!manifest) throw FormatError("cannot write manifest in '" + dir.string() + "'");
  manifest << "path,split,label,x0,y0,x1,y1\n";
  auto emit = [&](const std::vector<SynthRecord>& recs, const char* split) {
    for (const auto& r : recs) {
      const std::string rel = std::string(split) + "/" + r.id + ".ppm";
      write_image(dir / rel, r.image);
      manifest << rel << ',' << split << ',' << r.label << ',' << r.glyph.x0 << ',' << r.glyph.y0 << ',' << r.glyph.x1
               << ',' << r.glyph.y1 << '\n';
    }
  };
  emit(ds.train, "train");
  emit(ds.test, "test");
}

SynthDataset read_dataset(const std::filesystem::path& dir) {
  const auto path = dir / "manifest.csv";
  std::ifstream in(path);
  if (!in) throw FormatError("missing dataset manifest '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line) || line != "path,split,label,x0,y0,x1,y1")
    throw FormatError("bad manifest header in '" + path.string() + "'");
  SynthDataset ds;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) f.push_back(tok);
    if (f.size() != 7) throw FormatError("manifest line " + std::to_string(lineno) + ": expected 7 fields");
    SynthRecord r;
    try {
      r.label = std::stoi(f[2]);
      r.glyph = {std::stoul(f[3]), std::stoul(f[4]), std::stoul(f[5]), std::stoul(f[6])};
    } catch (const std::exception&) {
      throw FormatError("manifest line " + std::to_string(lineno) + ": non-numeric field");
    }
    if (r.label < 0) throw FormatError("manifest line " + std::to_string(lineno) + ": negative label");
    r.image = load_image(dir / f[0]);
    r.id = std::filesystem::path(f[0]).stem().string();
    if (f[1] == "train") {
      ds.train.push_back(std::move(r));
    } else if (f[1] == "test") {
      ds.test.push_back(std::move(r));
    } else {
      throw FormatError("manifest line " + std::to_string(lineno) + ": split must be train or test");
    }
  }
  return ds;
}

}  // namespace csparts
