#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>

#include "csparts/pipeline.hpp"
#include "csparts/synthgen.hpp"

namespace csparts {

/// Plain-text key=value run configuration. '#' starts a comment. Keys not in
/// the known set are rejected.
class RunConfig {
public:
  RunConfig();  // all defaults

  static RunConfig parse(std::string_view text);
  static RunConfig load(const std::filesystem::path& path);

  /// Applies one "key=value" override.
  void set(std::string_view assignment);
  void set(std::string_view key, std::string_view value);
  const std::string& get(std::string_view key) const;

  SynthConfig synth() const;
  PipelineConfig pipeline() const;

  /// Resolved config in canonical key order.
  std::string to_string() const;
  void save(const std::filesystem::path& path) const;

  static RunConfig from(const SynthConfig& s, const PipelineConfig& p);

  const std::map<std::string, std::string, std::less<>>& values() const noexcept { return values_; }

private:
  std::map<std::string, std::string, std::less<>> values_;
};

std::string_view to_string(ThresholdMethod m);
ThresholdMethod parse_threshold_method(std::string_view s);

}  // namespace csparts
