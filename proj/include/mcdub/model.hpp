#pragma once

// The full dubbing network (CDA -> CPP -> CAD) and the per-sample training
// example it consumes.

#include "mcdub/cad.hpp"
#include "mcdub/cda.hpp"
#include "mcdub/data/synthetic.hpp"
#include "mcdub/model_config.hpp"
#include "mcdub/nn/params.hpp"
#include "mcdub/prosody.hpp"

#include <cstdint>
#include <optional>

namespace mcdub {

// Component ablations. Context-sentence ablations (no previous / following)
// live in data::ContextConfig.
struct AblationFlags {
  bool no_cda_context = false;  // aligner sees only current-sentence phonemes
  bool no_cpp = false;          // prosody context replaced by zeros, no prosody losses
  bool no_cad_context = false;  // masked context mel is all mask

  bool operator==(const AblationFlags&) const = default;
};

// A selection in model space: mel z-scored, energy z-scored, pitch as
// z-scored log-F0 on voiced frames.
struct TrainingExample {
  std::string id;
  data::SelectedContext sel;  // sel.mel_gt is normalised
  Matrix masked_mel;          // T_mel x n_mels
  Matrix energy_target;       // T_mel x 1
  Matrix pitch_target;        // T_mel x 1, 0 where unvoiced
  Matrix voiced_mask;         // T_mel x 1, 1 where voiced
};

TrainingExample make_example(const data::ContextSample& sample, const data::ContextConfig& ctx,
                             const data::CorpusStats& stats, const AblationFlags& flags = {});

Matrix normalize_mel(const Matrix& mel, const data::CorpusStats& stats);
Matrix denormalize_mel(const Matrix& mel, const data::CorpusStats& stats);

struct ForwardResult {
  cda::AlignedFeatures cda;
  std::optional<prosody::CppOutput> cpp;  // empty under no_cpp
  ad::Var prosody_context;                // T_mel x 2D (zeros under no_cpp)
  cad::CadOutput cad;
};

class DubbingModel {
 public:
  DubbingModel(const ModelConfig& cfg, std::uint64_t seed);

  DubbingModel(const DubbingModel&) = delete;
  DubbingModel& operator=(const DubbingModel&) = delete;

  ForwardResult forward(const TrainingExample& ex, const AblationFlags& flags, const nn::Mode& mode = {}) const;

  const ModelConfig& config() const { return cfg_; }
  nn::ParamStore& params() { return params_; }
  const nn::ParamStore& params() const { return params_; }
  const cda::ContextDurationAligner& cda() const { return cda_; }
  const prosody::ContextProsodyPredictor& cpp() const { return cpp_; }
  const cad::ContextAcousticDecoder& cad() const { return cad_; }

 private:
  ModelConfig cfg_;
  nn::ParamStore params_;
  cda::ContextDurationAligner cda_;
  prosody::ContextProsodyPredictor cpp_;
  cad::ContextAcousticDecoder cad_;
};

// Inference on one sample: returns the current-sentence mel in raw
// (denormalised) log-mel space. No ground-truth audio of the current
// sentence is read.
Matrix synthesize_current(const DubbingModel& model, const data::ContextSample& sample,
                          const data::ContextConfig& ctx, const data::CorpusStats& stats,
                          const AblationFlags& flags = {});

}  // namespace mcdub
