#include "mcdub/model.hpp"

#include "mcdub/data/context.hpp"
#include "mcdub/errors.hpp"

#include <array>
#include <cmath>
#include <random>

namespace mcdub {

Matrix normalize_mel(const Matrix& mel, const data::CorpusStats& stats) {
  if (stats.mel_mean.size() != mel.cols() || stats.mel_std.size() != mel.cols()) {
    throw DimMismatch("mel statistics do not match n_mels");
  }
  return ((mel.rowwise() - stats.mel_mean).array().rowwise() / stats.mel_std.array()).matrix();
}

Matrix denormalize_mel(const Matrix& mel, const data::CorpusStats& stats) {
  if (stats.mel_mean.size() != mel.cols() || stats.mel_std.size() != mel.cols()) {
    throw DimMismatch("mel statistics do not match n_mels");
  }
  Matrix out = (mel.array().rowwise() * stats.mel_std.array()).matrix();
  out.rowwise() += stats.mel_mean;
  return out;
}

TrainingExample make_example(const data::ContextSample& sample, const data::ContextConfig& ctx,
                             const data::CorpusStats& stats, const AblationFlags& flags) {
  TrainingExample ex;
  ex.id = sample.id;
  ex.sel = data::select_context(sample, ctx);
  ex.sel.mel_gt = normalize_mel(ex.sel.mel_gt, stats);
  ex.masked_mel = data::build_masked_mel_context(ex.sel);
  if (flags.no_cad_context) ex.masked_mel.setConstant(data::kMelMaskValue);

  const Eigen::Index t_mel = ex.sel.mel_frames();
  ex.energy_target.resize(t_mel, 1);
  ex.pitch_target = Matrix::Zero(t_mel, 1);
  ex.voiced_mask = Matrix::Zero(t_mel, 1);
  for (Eigen::Index t = 0; t < t_mel; ++t) {
    const auto i = static_cast<size_t>(t);
    ex.energy_target(t, 0) = (ex.sel.energy[i] - stats.energy_mean) / stats.energy_std;
    if (ex.sel.voiced[i] != 0) {
      ex.pitch_target(t, 0) = (std::log(ex.sel.pitch[i]) - stats.logf0_mean) / stats.logf0_std;
      ex.voiced_mask(t, 0) = 1.0;
    }
  }
  return ex;
}

DubbingModel::DubbingModel(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg.resolved()) {
  cfg_.validate();
  std::mt19937_64 rng(seed);
  nn::Initializer init(params_, rng);
  cda_ = cda::ContextDurationAligner(init.scope("cda"), cfg_);
  cpp_ = prosody::ContextProsodyPredictor(init.scope("cpp"), cfg_);
  cad_ = cad::ContextAcousticDecoder(init.scope("cad"), cfg_);
}

ForwardResult DubbingModel::forward(const TrainingExample& ex, const AblationFlags& flags,
                                    const nn::Mode& mode) const {
  ForwardResult out;
  out.cda = cda::run_cda(ex.sel, cda_, mode, flags.no_cda_context);
  const Eigen::Index t_mel = out.cda.t_lip_pho.rows();
  if (flags.no_cpp) {
    out.prosody_context = ad::constant(Matrix::Zero(t_mel, 2 * cfg_.dim));
  } else {
    out.cpp = prosody::run_cpp(ex.sel.face_seq, out.cda.t_lip_pho, cpp_, cfg_.frame_ratio, mode);
    out.prosody_context = out.cpp->context;
  }
  const std::array<ad::Var, 2> parts{out.cda.t_lip_pho, out.prosody_context};
  out.cad = cad::run_cad(ad::concat_cols(parts), ex.masked_mel, cad_, mode);
  return out;
}

Matrix synthesize_current(const DubbingModel& model, const data::ContextSample& sample,
                          const data::ContextConfig& ctx, const data::CorpusStats& stats,
                          const AblationFlags& flags) {
  // The current sentence's audio is unknown at inference; blank it so nothing
  // downstream can depend on it.
  data::ContextSample blind = sample;
  blind.current.mel.setZero();
  std::fill(blind.current.pitch.begin(), blind.current.pitch.end(), 0.0);
  std::fill(blind.current.voiced.begin(), blind.current.voiced.end(), std::uint8_t{0});
  std::fill(blind.current.energy.begin(), blind.current.energy.end(), 0.0);

  const TrainingExample ex = make_example(blind, ctx, stats, flags);
  const ForwardResult fwd = model.forward(ex, flags);
  return denormalize_mel(cad::extract_current(fwd.cad.y_mel.value(), ex.sel.bounds), stats);
}

}  // namespace mcdub
