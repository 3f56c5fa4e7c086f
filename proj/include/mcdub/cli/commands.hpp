#pragma once

// Command implementations behind the mcdub executable. Artifact layout under
// the output directory:
//
//   config.ini                      resolved configuration of the last command
//   data/{single,train,valid,test}  corpora (see data/corpus_io.hpp)
//   checkpoints/stage{1,2}_final.ckpt, stage{N}_step{S}.ckpt, stage{N}_last_good.ckpt
//   loss_stage{1,2}.log
//   synth/<id>.arr                  current-sentence mel, raw log-mel space
//   eval_<split>.tsv                per-sample GPE/FFE (eval_<split>_gt.tsv with --gt)
//   k_sweep.tsv

#include "mcdub/cli/config.hpp"
#include "mcdub/eval/evaluation.hpp"
#include "mcdub/training/ksweep.hpp"

#include <exception>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace mcdub::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitDivergence = 3;
inline constexpr int kExitCheckpoint = 4;

int exit_code_for(const std::exception& e);

// Split index offsets keep sample ids unique across splits.
std::uint64_t split_offset(const std::string& split);

void cmd_gen_data(const RunConfig& cfg, std::ostream& log);

struct TrainSummary {
  std::filesystem::path final_checkpoint;
  std::uint64_t final_step = 0;
};
// Stage 1 then stage 2; cfg.checkpoint resumes from a saved checkpoint.
TrainSummary cmd_train(const RunConfig& cfg, std::ostream& log);

// Writes <out>/synth/<id>.arr for the requested ids (all of the split when
// empty) and returns the paths.
std::vector<std::filesystem::path> cmd_synthesize(const RunConfig& cfg, const std::vector<std::string>& ids,
                                                  std::ostream& log);

// With ground_truth set the reference mels are scored against themselves and
// no checkpoint is read.
eval::EvalReport cmd_evaluate(const RunConfig& cfg, bool ground_truth, std::ostream& log);

std::vector<training::KSweepRow> cmd_k_sweep(const RunConfig& cfg, std::ostream& log);

// Default checkpoint for synthesize/evaluate.
std::filesystem::path default_checkpoint(const RunConfig& cfg);

}  // namespace mcdub::cli
