#include <charconv>
#include <fstream>
#include <sstream>

#include "csparts/config.hpp"
#include "csparts/errors.hpp"
#include "text_kv.hpp"

namespace csparts {

namespace {

enum class Kind { Size, Double, Text, Bool, Threshold, Weights, Path };

struct KeySpec {
  std::string_view key;
  Kind kind;
  std::string_view fallback;
};

constexpr KeySpec kKeys[] = {
    {"seed", Kind::Size, "0"},
    {"synth.num_classes", Kind::Size, "8"},
    {"synth.train_per_class", Kind::Size, "40"},
    {"synth.test_per_class", Kind::Size, "20"},
    {"synth.image_size", Kind::Size, "64"},
    {"synth.glyph_size", Kind::Size, "9"},
    {"synth.clutter", Kind::Double, "0.5"},
    {"backbone.arch", Kind::Text, kDefaultArchitecture},
    {"backbone.epochs", Kind::Size, "20"},
    {"backbone.learning_rate", Kind::Double, "0.001"},
    {"backbone.batch_size", Kind::Size, "16"},
    {"backbone.momentum", Kind::Double, "0.9"},
    {"select.lambda", Kind::Double, "30"},
    {"final.lambda", Kind::Double, "0.001"},
    {"solver.max_iter", Kind::Size, "10000"},
    {"solver.tol", Kind::Double, "1e-06"},
    {"parts.k", Kind::Size, "4"},
    {"parts.threshold", Kind::Threshold, "mean"},
    {"parts.nms_radius", Kind::Size, "0"},
    {"parts.q", Kind::Double, "1"},
    {"parts.min_side", Kind::Size, "8"},
    {"parts.cluster_weights", Kind::Weights, "1,1,1,1,1,1"},
    {"train.ablation", Kind::Bool, "true"},
    {"data.dir", Kind::Path, ""},
    {"model.dir", Kind::Path, ""},
    {"out.dir", Kind::Path, ""},
};

const KeySpec& spec_for(std::string_view key) {
  for (const auto& k : kKeys)
    if (k.key == key) return k;
  throw ArgumentError("unknown config key '" + std::string(key) + "'");
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::size_t parse_size(std::string_view key, std::string_view v) {
  std::size_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty())
    throw ArgumentError("config key '" + std::string(key) + "' expects an unsigned integer, got '" + std::string(v) + "'");
  return out;
}

double parse_double(std::string_view key, std::string_view v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(std::string(v), &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw ArgumentError("config key '" + std::string(key) + "' expects a number, got '" + std::string(v) + "'");
}

std::array<double, kClusterDims> parse_weights(std::string_view key, std::string_view v) {
  std::array<double, kClusterDims> w{};
  std::stringstream ss{std::string(v)};
  std::string tok;
  std::size_t i = 0;
  while (std::getline(ss, tok, ',')) {
    if (i == kClusterDims) break;
    w[i] = parse_double(key, trim(tok));
    if (!(w[i] >= 0.0)) throw ArgumentError("cluster weights must be >= 0");
    ++i;
  }
  if (i != kClusterDims || std::getline(ss, tok, ','))
    throw ArgumentError("config key '" + std::string(key) + "' expects 6 comma-separated weights");
  return w;
}

// Validates a value and returns its canonical spelling.
std::string canonical(const KeySpec& spec, std::string_view raw) {
  const std::string v = trim(raw);
  switch (spec.kind) {
    case Kind::Size:
      return std::to_string(parse_size(spec.key, v));
    case Kind::Double:
      return detail::format_double(parse_double(spec.key, v));
    case Kind::Bool:
      if (v == "true" || v == "1") return "true";
      if (v == "false" || v == "0") return "false";
      throw ArgumentError("config key '" + std::string(spec.key) + "' expects true or false");
    case Kind::Threshold:
      return std::string(to_string(parse_threshold_method(v)));
    case Kind::Weights: {
      const auto w = parse_weights(spec.key, v);
      std::string out;
      for (std::size_t i = 0; i < kClusterDims; ++i) out += (i ? "," : "") + detail::format_double(w[i]);
      return out;
    }
    case Kind::Text: {
      if (spec.key == "backbone.arch") return BackboneParams{3, 3, 3, parse_architecture(v), {}, 0}.architecture();
      return v;
    }
    case Kind::Path:
      return v;
  }
  return v;
}

}  // namespace

std::string_view to_string(ThresholdMethod m) { return m == ThresholdMethod::Mean ? "mean" : "otsu"; }

ThresholdMethod parse_threshold_method(std::string_view s) {
  if (s == "mean") return ThresholdMethod::Mean;
  if (s == "otsu") return ThresholdMethod::Otsu;
  throw ArgumentError("threshold method must be 'mean' or 'otsu', got '" + std::string(s) + "'");
}

RunConfig::RunConfig() {
  for (const auto& k : kKeys) values_.emplace(std::string(k.key), canonical(k, k.fallback));
}

RunConfig RunConfig::parse(std::string_view text) {
  RunConfig cfg;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    if (trim(line).empty()) continue;
    if (line.find('=') == std::string::npos)
      throw ArgumentError("config line " + std::to_string(lineno) + ": expected key=value");
    cfg.set(line);
  }
  return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open config file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void RunConfig::set(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) throw ArgumentError("expected key=value, got '" + std::string(assignment) + "'");
  set(trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

void RunConfig::set(std::string_view key, std::string_view value) {
  const KeySpec& spec = spec_for(key);
  values_[std::string(spec.key)] = canonical(spec, value);
}

const std::string& RunConfig::get(std::string_view key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ArgumentError("unknown config key '" + std::string(key) + "'");
  return it->second;
}

SynthConfig RunConfig::synth() const {
  SynthConfig s;
  s.num_classes = parse_size("synth.num_classes", get("synth.num_classes"));
  s.train_per_class = parse_size("synth.train_per_class", get("synth.train_per_class"));
  s.test_per_class = parse_size("synth.test_per_class", get("synth.test_per_class"));
  s.image_size = parse_size("synth.image_size", get("synth.image_size"));
  s.glyph_size = parse_size("synth.glyph_size", get("synth.glyph_size"));
  s.clutter = parse_double("synth.clutter", get("synth.clutter"));
  s.seed = parse_size("seed", get("seed"));
  return s;
}

PipelineConfig RunConfig::pipeline() const {
  PipelineConfig p;
  p.architecture = get("backbone.arch");
  p.train.epochs = parse_size("backbone.epochs", get("backbone.epochs"));
  p.train.learning_rate = parse_double("backbone.learning_rate", get("backbone.learning_rate"));
  p.train.batch_size = parse_size("backbone.batch_size", get("backbone.batch_size"));
  p.train.momentum = parse_double("backbone.momentum", get("backbone.momentum"));
  p.select_lambda = parse_double("select.lambda", get("select.lambda"));
  p.final_lambda = parse_double("final.lambda", get("final.lambda"));
  p.solver.max_iter = parse_size("solver.max_iter", get("solver.max_iter"));
  p.solver.tol = parse_double("solver.tol", get("solver.tol"));
  p.k = parse_size("parts.k", get("parts.k"));
  p.threshold = parse_threshold_method(get("parts.threshold"));
  p.nms_radius = parse_size("parts.nms_radius", get("parts.nms_radius"));
  p.boxes.mass_quantile = parse_double("parts.q", get("parts.q"));
  p.boxes.min_side = parse_size("parts.min_side", get("parts.min_side"));
  p.cluster_weights = parse_weights("parts.cluster_weights", get("parts.cluster_weights"));
  p.train_ablation = get("train.ablation") == "true";
  p.seed = parse_size("seed", get("seed"));
  p.train.seed = p.seed;
  return p;
}

RunConfig RunConfig::from(const SynthConfig& s, const PipelineConfig& p) {
  RunConfig c;
  c.set("seed", std::to_string(p.seed));
  c.set("synth.num_classes", std::to_string(s.num_classes));
  c.set("synth.train_per_class", std::to_string(s.train_per_class));
  c.set("synth.test_per_class", std::to_string(s.test_per_class));
  c.set("synth.image_size", std::to_string(s.image_size));
  c.set("synth.glyph_size", std::to_string(s.glyph_size));
  c.set("synth.clutter", detail::format_double(s.clutter));
  c.set("backbone.arch", p.architecture);
  c.set("backbone.epochs", std::to_string(p.train.epochs));
  c.set("backbone.learning_rate", detail::format_double(p.train.learning_rate));
  c.set("backbone.batch_size", std::to_string(p.train.batch_size));
  c.set("backbone.momentum", detail::format_double(p.train.momentum));
  c.set("select.lambda", detail::format_double(p.select_lambda));
  c.set("final.lambda", detail::format_double(p.final_lambda));
  c.set("solver.max_iter", std::to_string(p.solver.max_iter));
  c.set("solver.tol", detail::format_double(p.solver.tol));
  c.set("parts.k", std::to_string(p.k));
  c.set("parts.threshold", csparts::to_string(p.threshold));
  c.set("parts.nms_radius", std::to_string(p.nms_radius));
  c.set("parts.q", detail::format_double(p.boxes.mass_quantile));
  c.set("parts.min_side", std::to_string(p.boxes.min_side));
  std::string w;
  for (std::size_t i = 0; i < kClusterDims; ++i) w += (i ? "," : "") + detail::format_double(p.cluster_weights[i]);
  c.set("parts.cluster_weights", w);
  c.set("train.ablation", p.train_ablation ? "true" : "false");
  return c;
}

std::string RunConfig::to_string() const {
  std::string out;
  for (const auto& k : kKeys) out += std::string(k.key) + "=" + get(k.key) + "\n";
  return out;
}

void RunConfig::save(const std::filesystem::path& path) const { detail::write_text(path, to_string()); }

}  // namespace csparts
