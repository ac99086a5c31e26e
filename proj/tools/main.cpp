#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"

using namespace csparts::cli;

namespace {

void add_common(CLI::App* sub, CommonOptions& opts) {
  sub->add_option("-c,--config", opts.config_file, "key=value config file")->check(CLI::ExistingFile);
  sub->add_option("-s,--set", opts.overrides, "override a config key (key=value), repeatable");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Classification-specific part estimation on glyph images"};
  app.require_subcommand(1);

  CommonOptions synth_opts, train_opts, parts_opts, eval_opts;
  std::string data, model, out;

  auto* synth = app.add_subcommand("synth", "generate a synthetic glyph dataset");
  add_common(synth, synth_opts);
  synth->add_option("--out", data, "dataset directory (data.dir)");

  auto* train = app.add_subcommand("train", "train the full pipeline");
  add_common(train, train_opts);
  train->add_option("--data", data, "dataset directory (data.dir)");
  train->add_option("--model", model, "model bundle directory (model.dir)");

  PartsOptions popts;
  auto* parts = app.add_subcommand("parts", "estimate part boxes for one image");
  add_common(parts, parts_opts);
  parts->add_option("--model", model, "model bundle directory (model.dir)");
  parts->add_option("--image", popts.image, "PPM or PGM image")->required();
  parts->add_option("--id", popts.image_id, "image id for the CSV (default: file stem)");
  parts->add_option("--out", out, "output directory (out.dir)");

  EvalVariants variants;
  auto* eval = app.add_subcommand("eval", "evaluate a model on a dataset's test split");
  add_common(eval, eval_opts);
  eval->add_option("--model", model, "model bundle directory (model.dir)");
  eval->add_option("--data", data, "dataset directory (data.dir)");
  eval->add_option("--out", out, "report directory (out.dir)");
  eval->add_flag("--baseline", variants.baseline, "global features only");
  eval->add_flag("--nofs", variants.nofs, "parts from all channels");
  eval->add_flag("--fs", variants.fs, "parts from selected channels");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  CLI::App* sub = app.get_subcommands().front();
  const std::string stage = sub->get_name();
  CommonOptions& common = sub == synth ? synth_opts : sub == train ? train_opts : sub == parts ? parts_opts : eval_opts;

  csparts::RunConfig cfg;
  try {
    cfg = resolve_config(common);
    if (!data.empty()) cfg.set("data.dir", data);
    if (!model.empty()) cfg.set("model.dir", model);
    if (!out.empty()) cfg.set("out.dir", out);
  } catch (...) {
    return report_error("config", std::cerr);
  }

  try {
    if (sub == synth) return cmd_synth(cfg, std::cout);
    if (sub == train) return cmd_train(cfg, std::cout);
    if (sub == parts) return cmd_parts(cfg, popts, std::cout);
    return cmd_eval(cfg, variants, std::cout);
  } catch (...) {
    return report_error(stage, std::cerr);
  }
}
