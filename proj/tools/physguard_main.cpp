#include <iostream>

#include <CLI11.hpp>

#include "physguard/commands.hpp"

int main(int argc, char** argv) {
  physguard::CommandOptions opts;
  CLI::App app{"Physics-guided deepfake detection and federated screening toolkit", "physguard"};
  app.set_version_flag("--version", physguard::kToolVersion);
  app.require_subcommand(1);
  app.fallthrough();

  app.add_option("--config", opts.config, "INI configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", opts.seed, "run seed; overrides [run] seed");
  app.add_option("--out", opts.out, "output directory")->capture_default_str();
  app.add_option("--jobs", opts.jobs, "worker threads")->capture_default_str();
  app.add_flag("--verbose", opts.verbose, "progress on stderr");

  auto* synth = app.add_subcommand("synth", "write a synthetic corpus (WAV + EMB + manifest)");
  auto* extract = app.add_subcommand("extract", "physics feature table from a corpus manifest");
  extract->add_option("--manifest", opts.manifest, "corpus manifest (JSON lines)")->required();
  auto* fuse = app.add_subcommand("fuse", "fit or apply the orthogonal fusion transform");
  fuse->add_option("--manifest", opts.manifest, "corpus manifest")->required();
  fuse->add_option("--features", opts.features, "feature table from extract")->required();
  fuse->add_option("--fusion", opts.fusion, "existing transform to apply instead of fitting");
  auto* train = app.add_subcommand("train", "train the dropout classifier head");
  train->add_option("--fused", opts.fused, "fused feature table")->required();
  auto* predict = app.add_subcommand("predict", "Monte-Carlo dropout predictions");
  predict->add_option("--model", opts.model, "trained model")->required();
  predict->add_option("--fused", opts.fused, "fused feature table")->required();
  auto* metrics = app.add_subcommand("metrics", "detection metrics and ECDF tables");
  metrics->add_option("--predictions", opts.predictions, "predictions JSON lines")->required();
  metrics->add_option("--features", opts.features, "feature table for ECDF/KS output");
  auto* pipeline = app.add_subcommand("pipeline", "end-to-end run on one train/test split");
  auto* flsim = app.add_subcommand("flsim", "federated screening simulation");
  (void)synth;
  (void)pipeline;
  (void)flsim;

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return physguard::kExitUsage;
  }
  return physguard::run_command(app.get_subcommands().front()->get_name(), opts);
}
