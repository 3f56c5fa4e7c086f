#pragma once

#include "mcdub/data/synthetic.hpp"
#include "mcdub/model.hpp"
#include "mcdub/training/checkpoint.hpp"
#include "mcdub/training/losses.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace mcdub::training {

struct TrainConfig {
  double lr = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.98;
  double eps = 1e-9;
  int batch_size = 8;
  int steps_stage1 = 300;
  int steps_stage2 = 500;
  std::uint64_t seed = 1;
  data::ContextConfig context;
  AblationFlags ablation;
  bool two_stage = true;
  double clip_norm = 1.0;  // <= 0 disables clipping
  LossWeights weights;
  int save_every = 0;  // 0: only final checkpoints

  void validate() const;
  std::string to_text() const;
};

class Adam {
 public:
  Adam(const nn::ParamStore& params, double lr, double beta1, double beta2, double eps);

  // One update from the gradients currently held by the parameters.
  void step(nn::ParamStore& params);

  std::uint64_t steps() const { return t_; }
  const std::vector<Matrix>& first_moment() const { return m_; }
  const std::vector<Matrix>& second_moment() const { return v_; }
  void restore(std::uint64_t t, std::vector<Matrix> m, std::vector<Matrix> v);

 private:
  double lr_, beta1_, beta2_, eps_;
  std::uint64_t t_ = 0;
  std::vector<Matrix> m_, v_;
};

// Scales all gradients so their global L2 norm is at most max_norm; returns
// the norm before clipping.
double clip_grad_norm(nn::ParamStore& params, double max_norm);

struct LossRecord {
  int stage = 1;
  std::uint64_t step = 0;
  LossBreakdown loss;
};

// Append-only tab-separated loss log: stage, step, l_energy, l_pitch, l_mel,
// l_sum.
void append_loss_record(const std::filesystem::path& path, const LossRecord& rec);
std::vector<LossRecord> read_loss_log(const std::filesystem::path& path);

struct StageOptions {
  std::filesystem::path out_dir;  // empty: no files written
  std::function<void(const LossRecord&)> on_step;
};

struct StageResult {
  std::vector<LossRecord> records;
  Checkpoint checkpoint;
};

// Single-writer training loop. Batches are drawn from a seeded reshuffle of
// the examples each epoch; gradients are averaged over the batch, clipped,
// then applied with Adam.
class Trainer {
 public:
  Trainer(DubbingModel& model, const TrainConfig& cfg, int stage);

  // Runs optimizer steps until the global step counter reaches `until_step`.
  // Throws DivergenceDetected on a non-finite loss or gradient, after writing
  // the last good state to <out_dir>/checkpoints/stage<N>_last_good.ckpt.
  StageResult run(std::span<const TrainingExample> examples, std::uint64_t until_step, const StageOptions& opts = {});

  // Restores parameters, optimizer moments and the step counter.
  void resume(const Checkpoint& ckpt);

  std::uint64_t step() const { return step_; }
  void set_step(std::uint64_t s) { step_ = s; }
  const Adam& optimizer() const { return adam_; }

 private:
  LossBreakdown train_step(std::span<const TrainingExample> examples);

  DubbingModel& model_;
  TrainConfig cfg_;
  int stage_;
  Adam adam_;
  std::mt19937_64 rng_;
  std::uint64_t step_ = 0;
  std::vector<size_t> order_;
  size_t cursor_ = 0;
};

// Mean losses over examples in evaluation mode (no dropout).
LossBreakdown evaluate_loss(const DubbingModel& model, std::span<const TrainingExample> examples,
                            const AblationFlags& flags, const LossWeights& weights = {});

std::vector<TrainingExample> make_examples(const data::Corpus& corpus, const data::ContextConfig& ctx,
                                           const data::CorpusStats& stats, const AblationFlags& flags);

// Stage-1 context: both neighbours disabled.
data::ContextConfig single_sentence(const data::ContextConfig& ctx);

// Single-sentence pretraining for cfg.steps_stage1 steps.
StageResult train_stage1(DubbingModel& model, const data::Corpus& corpus, const data::CorpusStats& stats,
                         const TrainConfig& cfg, const StageOptions& opts = {});

// Loads `init` strictly (stage tag must be 1), then trains on context samples
// for cfg.steps_stage2 steps. With init == nullptr the model is trained from
// its current parameters (the no-two-stage ablation).
StageResult train_stage2(DubbingModel& model, const data::Corpus& corpus, const data::CorpusStats& stats,
                         const Checkpoint* init, const TrainConfig& cfg, const StageOptions& opts = {});

}  // namespace mcdub::training
