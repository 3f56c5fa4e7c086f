#include "mcdub/cli/commands.hpp"

#include "mcdub/data/array_io.hpp"
#include "mcdub/data/corpus_io.hpp"
#include "mcdub/errors.hpp"
#include "mcdub/training/checkpoint.hpp"

#include <fstream>
#include <optional>
#include <ostream>
#include <set>

namespace mcdub::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kSplits[] = {"single", "train", "valid", "test"};

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

void write_config_snapshot(const RunConfig& cfg) { write_text(cfg.out / "config.ini", format_config(cfg)); }

data::Corpus load_split(const RunConfig& cfg, const std::string& split) {
  const fs::path dir = cfg.corpus_root() / split;
  if (!fs::exists(dir / "manifest.txt")) {
    throw IoError("no corpus at " + dir.string() + " (run gen-data first)");
  }
  data::Corpus corpus = data::load_corpus(dir);
  data::ShapeConfig expected = cfg.data.shape;
  expected.with_context = corpus.info.shape.with_context;
  if (!(corpus.info.shape == expected) || !(corpus.info.frame_cfg == cfg.data.frame)) {
    throw ConfigError("corpus at " + dir.string() + " was generated with different [data] settings");
  }
  return corpus;
}

void check_compatible(const DubbingModel& model, const training::Checkpoint& ck) {
  if (ck.config_digest != fnv1a64(model.config().to_text())) {
    throw IncompatibleCheckpoint("checkpoint was written for a different model configuration");
  }
}

training::StageOptions stage_options(const RunConfig& cfg, std::ostream& log) {
  training::StageOptions opts;
  opts.out_dir = cfg.out;
  opts.on_step = [&log](const training::LossRecord& r) {
    if (r.step % 50 == 0) {
      log << "stage " << r.stage << " step " << r.step << " l_sum " << data::format_real(r.loss.l_sum) << "\n";
    }
  };
  return opts;
}

DubbingModel* load_model(const RunConfig& cfg, std::optional<DubbingModel>& slot, std::ostream& log) {
  slot.emplace(cfg.model, cfg.seed);
  const fs::path path = cfg.checkpoint.empty() ? default_checkpoint(cfg) : cfg.checkpoint;
  const training::Checkpoint ck = training::load_checkpoint(path);
  check_compatible(*slot, ck);
  training::load_parameters(*slot, ck, true);
  log << "loaded " << path.string() << " (stage " << ck.stage << ", step " << ck.step << ")\n";
  return &*slot;
}

}  // namespace

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const NonIntegerRatio*>(&e) ||
      dynamic_cast<const InvalidShapeConfig*>(&e)) {
    return kExitConfig;
  }
  if (dynamic_cast<const DivergenceDetected*>(&e)) return kExitDivergence;
  if (dynamic_cast<const IncompatibleCheckpoint*>(&e)) return kExitCheckpoint;
  return kExitFailure;
}

std::uint64_t split_offset(const std::string& split) {
  if (split == "train") return 0;
  if (split == "valid") return 100000;
  if (split == "test") return 200000;
  if (split == "single") return 300000;
  throw ConfigError("unknown split '" + split + "'");
}

fs::path default_checkpoint(const RunConfig& cfg) { return cfg.out / "checkpoints" / "stage2_final.ckpt"; }

void cmd_gen_data(const RunConfig& cfg, std::ostream& log) {
  const auto counts = [&](const std::string& s) {
    if (s == "single") return cfg.data.single_count;
    if (s == "train") return cfg.data.train_count;
    if (s == "valid") return cfg.data.valid_count;
    return cfg.data.test_count;
  };
  std::vector<std::pair<std::string, data::Corpus>> corpora;
  for (const char* split : kSplits) {
    data::ShapeConfig shape = cfg.data.shape;
    shape.with_context = std::string(split) != "single";
    corpora.emplace_back(split, data::generate_synthetic_corpus(cfg.seed, counts(split), cfg.data.frame, shape,
                                                                split_offset(split)));
  }
  // Every split is normalised with training-split statistics.
  data::CorpusStats stats;
  for (const auto& [name, c] : corpora) {
    if (name == "train") stats = c.info.stats;
  }
  for (auto& [name, c] : corpora) {
    c.info.stats = stats;
    data::validate_corpus(c);
    const fs::path dir = cfg.corpus_root() / name;
    fs::remove_all(dir);
    data::save_corpus(dir, c);
    log << "wrote " << c.samples.size() << " samples to " << dir.string() << "\n";
  }
  write_config_snapshot(cfg);
}

TrainSummary cmd_train(const RunConfig& cfg, std::ostream& log) {
  const auto& tc = cfg.train;
  const data::Corpus context = load_split(cfg, "train");
  const data::CorpusStats& stats = context.info.stats;
  DubbingModel model(cfg.model, cfg.seed);
  log << "model parameters: " << model.params().scalar_count() << "\n";

  std::optional<training::Checkpoint> resume;
  if (!cfg.checkpoint.empty()) {
    resume = training::load_checkpoint(cfg.checkpoint);
    check_compatible(model, *resume);
    if (!tc.two_stage && resume->stage != 2) {
      throw IncompatibleCheckpoint("without two-stage training only stage-2 checkpoints can be resumed");
    }
    log << "resuming from " << cfg.checkpoint.string() << " at step " << resume->step << "\n";
  } else {
    fs::remove(cfg.out / "loss_stage1.log");
    fs::remove(cfg.out / "loss_stage2.log");
  }
  write_config_snapshot(cfg);
  const auto opts = stage_options(cfg, log);

  std::optional<training::Checkpoint> stage1;
  if (tc.two_stage && !(resume && resume->stage == 2)) {
    const data::Corpus single = load_split(cfg, "single");
    if (resume) {
      training::Trainer trainer(model, tc, 1);
      trainer.resume(*resume);
      const auto examples = training::make_examples(single, training::single_sentence(tc.context), stats, tc.ablation);
      stage1 = trainer.run(examples, static_cast<std::uint64_t>(tc.steps_stage1), opts).checkpoint;
    } else {
      stage1 = training::train_stage1(model, single, stats, tc, opts).checkpoint;
    }
    log << "stage 1 done at step " << stage1->step << "\n";
  }

  training::StageResult r2;
  if (resume && resume->stage == 2) {
    training::Trainer trainer(model, tc, 2);
    trainer.resume(*resume);
    const auto examples = training::make_examples(context, tc.context, stats, tc.ablation);
    const std::uint64_t total =
        static_cast<std::uint64_t>(tc.steps_stage2) + (tc.two_stage ? static_cast<std::uint64_t>(tc.steps_stage1) : 0);
    r2 = trainer.run(examples, total, opts);
  } else {
    r2 = training::train_stage2(model, context, stats, stage1 ? &*stage1 : nullptr, tc, opts);
  }
  log << "stage 2 done at step " << r2.checkpoint.step << "\n";
  return {cfg.out / "checkpoints" / "stage2_final.ckpt", r2.checkpoint.step};
}

std::vector<fs::path> cmd_synthesize(const RunConfig& cfg, const std::vector<std::string>& ids, std::ostream& log) {
  const data::Corpus corpus = load_split(cfg, cfg.split);
  std::optional<DubbingModel> slot;
  const DubbingModel& model = *load_model(cfg, slot, log);

  std::set<std::string> wanted(ids.begin(), ids.end());
  std::set<std::string> known;
  for (const auto& s : corpus.samples) known.insert(s.id);
  for (const auto& id : wanted) {
    if (!known.count(id)) throw ConfigError("no sample '" + id + "' in split " + cfg.split);
  }
  std::vector<fs::path> written;
  for (const auto& s : corpus.samples) {
    if (!wanted.empty() && !wanted.count(s.id)) continue;
    const Matrix mel = synthesize_current(model, s, cfg.train.context, corpus.info.stats, cfg.train.ablation);
    const fs::path path = cfg.out / "synth" / (s.id + ".arr");
    fs::create_directories(path.parent_path());
    data::save_array(path, data::from_matrix(mel));
    written.push_back(path);
  }
  log << "wrote " << written.size() << " mels to " << (cfg.out / "synth").string() << "\n";
  return written;
}

eval::EvalReport cmd_evaluate(const RunConfig& cfg, bool ground_truth, std::ostream& log) {
  const data::Corpus corpus = load_split(cfg, cfg.split);
  eval::EvalReport report;
  if (ground_truth) {
    std::vector<Matrix> mels;
    for (const auto& s : corpus.samples) mels.push_back(s.current.mel);
    report = eval::evaluate_mels(corpus, mels);
  } else {
    std::optional<DubbingModel> slot;
    const DubbingModel& model = *load_model(cfg, slot, log);
    report = eval::evaluate_model(model, corpus, cfg.train.context, corpus.info.stats, cfg.train.ablation);
  }
  const fs::path path = cfg.out / ("eval_" + cfg.split + (ground_truth ? "_gt" : "") + ".tsv");
  write_text(path, eval::format_eval_report(report));
  log << "mean gpe " << (report.mean_gpe ? data::format_real(*report.mean_gpe) : "-") << " ffe "
      << data::format_real(report.mean_ffe) << " over " << report.rows.size() << " samples -> " << path.string()
      << "\n";
  return report;
}

std::vector<training::KSweepRow> cmd_k_sweep(const RunConfig& cfg, std::ostream& log) {
  const data::Corpus context = load_split(cfg, "train");
  const data::Corpus held = load_split(cfg, cfg.split);
  std::optional<data::Corpus> single;
  std::optional<training::Checkpoint> stage1;
  if (!cfg.checkpoint.empty()) {
    stage1 = training::load_checkpoint(cfg.checkpoint);
    if (stage1->stage != 1) throw IncompatibleCheckpoint("k-sweep expects a stage-1 checkpoint");
    const DubbingModel probe(cfg.model, cfg.seed);
    check_compatible(probe, *stage1);
  } else if (cfg.train.two_stage) {
    single = load_split(cfg, "single");
  }
  training::KSweepInputs in;
  in.single = single ? &*single : nullptr;
  in.context = &context;
  in.eval = &held;
  in.stats = context.info.stats;
  in.stage1 = stage1 ? &*stage1 : nullptr;
  write_config_snapshot(cfg);
  const auto rows = training::k_sweep(in, cfg.model, cfg.train, cfg.k_list);
  write_text(cfg.out / "k_sweep.tsv", training::format_ksweep_report(rows));
  log << "wrote " << rows.size() << " rows to " << (cfg.out / "k_sweep.tsv").string() << "\n";
  return rows;
}

}  // namespace mcdub::cli
