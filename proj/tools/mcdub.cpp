// mcdub: synthetic-data video dubbing pipeline.
//
//   mcdub gen-data   --out DIR [--seed N] [--config FILE] [--preset toy|paper]
//   mcdub train      --out DIR [--checkpoint CKPT] [ablation flags]
//   mcdub synthesize --out DIR [--checkpoint CKPT] [--split S] [--ids a,b]
//   mcdub evaluate   --out DIR [--checkpoint CKPT] [--split S] [--gt]
//   mcdub k-sweep    --out DIR [--split S] [--checkpoint STAGE1_CKPT]

#include "mcdub/cli/commands.hpp"
#include "mcdub/errors.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

void add_common(CLI::App* app, mcdub::cli::CliOverrides& o) {
  app->add_option_function<std::string>("--config", [&o](const std::string& v) { o.config_file = v; },
                                        "Config file (sections [data] [model] [train] [eval])");
  app->add_option_function<std::string>("--preset", [&o](const std::string& v) { o.preset = v; },
                                        "Default set: toy or paper");
  app->add_option_function<std::uint64_t>("--seed", [&o](std::uint64_t v) { o.seed = v; }, "Global seed");
  app->add_option_function<std::string>("--out", [&o](const std::string& v) { o.out = v; }, "Output directory");
  app->add_option_function<std::string>("--data", [&o](const std::string& v) { o.data_dir = v; },
                                        "Corpus root (default <out>/data)");
  app->add_option_function<int>("--k", [&o](int v) { o.k = v; }, "Max context phonemes per side");
  app->add_option_function<std::string>("--checkpoint", [&o](const std::string& v) { o.checkpoint = v; },
                                        "Checkpoint to load or resume from");
  app->add_option_function<std::string>("--split", [&o](const std::string& v) { o.split = v; },
                                        "Corpus split: train, valid, test, single");
  app->add_option("--set", o.settings, "Override one setting, section.key=value");
  app->add_flag("--no-prev", o.no_prev, "Drop the previous sentence");
  app->add_flag("--no-fol", o.no_fol, "Drop the following sentence");
  app->add_flag("--no-cpp", o.no_cpp, "Disable the context prosody predictor");
  app->add_flag("--no-cda-context", o.no_cda_context, "Aligner sees only current-sentence phonemes");
  app->add_flag("--no-cad-context", o.no_cad_context, "Decoder gets no context mel");
  app->add_flag("--no-two-stage", o.no_two_stage, "Skip single-sentence pretraining");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mcdub: context-aware video dubbing on synthetic corpora"};
  app.require_subcommand(1);

  mcdub::cli::CliOverrides o;
  std::vector<std::string> ids;
  bool ground_truth = false;

  auto* gen = app.add_subcommand("gen-data", "Generate single/train/valid/test corpora");
  auto* train = app.add_subcommand("train", "Two-stage training");
  auto* synth = app.add_subcommand("synthesize", "Write current-sentence mels for a split");
  auto* evaluate = app.add_subcommand("evaluate", "GPE/FFE report for a split");
  auto* sweep = app.add_subcommand("k-sweep", "Train and evaluate one model per K");
  for (auto* sub : {gen, train, synth, evaluate, sweep}) add_common(sub, o);
  synth->add_option("--ids", ids, "Sample ids (default: whole split)")->delimiter(',');
  evaluate->add_flag("--gt", ground_truth, "Score ground-truth mels instead of a model");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : mcdub::cli::kExitConfig;
  }

  try {
    const mcdub::cli::RunConfig cfg = mcdub::cli::resolve_config(o);
    if (gen->parsed()) mcdub::cli::cmd_gen_data(cfg, std::cout);
    else if (train->parsed()) mcdub::cli::cmd_train(cfg, std::cout);
    else if (synth->parsed()) mcdub::cli::cmd_synthesize(cfg, ids, std::cout);
    else if (evaluate->parsed()) mcdub::cli::cmd_evaluate(cfg, ground_truth, std::cout);
    else if (sweep->parsed()) mcdub::cli::cmd_k_sweep(cfg, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return mcdub::cli::exit_code_for(e);
  }
  return mcdub::cli::kExitOk;
}
