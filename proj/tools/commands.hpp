#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "csparts/config.hpp"

namespace csparts::cli {

struct CommonOptions {
  std::optional<std::filesystem::path> config_file;
  std::vector<std::string> overrides;  // key=value
};

RunConfig resolve_config(const CommonOptions& opts);

int cmd_synth(const RunConfig& cfg, std::ostream& out);
int cmd_train(const RunConfig& cfg, std::ostream& out);

struct PartsOptions {
  std::filesystem::path image;
  std::string image_id;
};
int cmd_parts(const RunConfig& cfg, const PartsOptions& opts, std::ostream& out);

struct EvalVariants {
  bool baseline = false;
  bool nofs = false;
  bool fs = false;
};
int cmd_eval(const RunConfig& cfg, const EvalVariants& variants, std::ostream& out);

/// Maps an exception to an exit code and a one-line "[stage] message" text.
int report_error(std::string_view stage, std::ostream& err);

}  // namespace csparts::cli
