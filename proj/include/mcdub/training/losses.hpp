#pragma once

#include "mcdub/ad/autodiff.hpp"
#include "mcdub/model.hpp"

#include <cstdint>
#include <span>

namespace mcdub::training {

struct LossBreakdown {
  double l_energy = 0.0;
  double l_pitch = 0.0;
  double l_mel = 0.0;
  double l_sum = 0.0;
};

// Optional per-term weights; all 1 gives the plain sum.
struct LossWeights {
  double energy = 1.0;
  double pitch = 1.0;
  double mel = 1.0;
};

struct ProsodyMelSet {
  Matrix energy;  // T x 1
  Matrix pitch;   // T x 1
  Matrix mel;     // T x n_mels
};

// MSE on energy, MSE on pitch over voiced frames, MAE on mel, summed.
// Throws LengthMismatch.
LossBreakdown compute_losses(const ProsodyMelSet& pred, const ProsodyMelSet& target,
                             std::span<const std::uint8_t> voiced, const LossWeights& weights = {});

struct LossGraph {
  ad::Var energy, pitch, mel, total;
  LossBreakdown values() const;
};

// Differentiable losses for one forward pass. Under no_cpp the prosody terms
// are constant zero.
LossGraph build_losses(const ForwardResult& fwd, const TrainingExample& ex, const LossWeights& weights = {});

}  // namespace mcdub::training
