#include "mcdub/training/losses.hpp"

#include "mcdub/errors.hpp"

#include <cmath>
#include <string>

namespace mcdub::training {

LossBreakdown compute_losses(const ProsodyMelSet& pred, const ProsodyMelSet& target,
                             std::span<const std::uint8_t> voiced, const LossWeights& weights) {
  const Eigen::Index t = target.mel.rows();
  const bool shapes_ok = pred.mel.rows() == t && pred.mel.cols() == target.mel.cols() && pred.energy.rows() == t &&
                         target.energy.rows() == t && pred.pitch.rows() == t && target.pitch.rows() == t &&
                         static_cast<Eigen::Index>(voiced.size()) == t;
  if (!shapes_ok) throw LengthMismatch("loss inputs must share T = " + std::to_string(t));

  LossBreakdown out;
  if (t > 0) out.l_energy = (pred.energy - target.energy).squaredNorm() / static_cast<double>(t);
  double pitch_sq = 0.0;
  double voiced_count = 0.0;
  for (Eigen::Index i = 0; i < t; ++i) {
    if (voiced[static_cast<size_t>(i)] != 0) {
      const double d = pred.pitch(i, 0) - target.pitch(i, 0);
      pitch_sq += d * d;
      voiced_count += 1.0;
    }
  }
  out.l_pitch = voiced_count > 0.0 ? pitch_sq / voiced_count : 0.0;
  if (target.mel.size() > 0) {
    out.l_mel = (pred.mel - target.mel).cwiseAbs().sum() / static_cast<double>(target.mel.size());
  }
  out.l_sum = weights.energy * out.l_energy + weights.pitch * out.l_pitch + weights.mel * out.l_mel;
  return out;
}

LossBreakdown LossGraph::values() const {
  return {energy.scalar(), pitch.scalar(), mel.scalar(), total.scalar()};
}

LossGraph build_losses(const ForwardResult& fwd, const TrainingExample& ex, const LossWeights& weights) {
  LossGraph g;
  if (fwd.cpp) {
    g.energy = ad::masked_mse(fwd.cpp->energy, ex.energy_target, Matrix());
    g.pitch = ad::masked_mse(fwd.cpp->pitch, ex.pitch_target, ex.voiced_mask);
  } else {
    g.energy = ad::constant(Matrix::Zero(1, 1));
    g.pitch = ad::constant(Matrix::Zero(1, 1));
  }
  g.mel = ad::mae(fwd.cad.y_mel, ex.sel.mel_gt);
  g.total = ad::add(ad::add(ad::scale(g.energy, weights.energy), ad::scale(g.pitch, weights.pitch)),
                    ad::scale(g.mel, weights.mel));
  return g;
}

}  // namespace mcdub::training
