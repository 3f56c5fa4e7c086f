#pragma once

// Synthetic stand-in for a consecutive-sentence audio-visual dubbing corpus.
//
// Each sample is a short "video" of up to three consecutive sentences. A
// per-corpus random projection maps phoneme-aligned latent states to lip,
// face and mel features, so lip motion carries phoneme identity and the
// alignment is learnable. A slow arousal/valence contour runs across the
// whole video: arousal scales mel magnitude (energy), valence shifts log-F0,
// and both are visible in the face features. Pitch is written into a
// dedicated mel bin so it can be decoded back from any mel.

#include "mcdub/data/types.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <array>
#include <vector>

namespace mcdub::data {

struct ShapeConfig {
  int vocab = 32;
  int d_lip = 16;
  int d_face = 8;
  int n_mels = 80;
  int min_phonemes = 4;
  int max_phonemes = 60;
  int min_frames_per_phoneme = 1;
  int max_frames_per_phoneme = 3;
  int latent_dim = 8;
  bool with_context = true;
  // Probability that a sample lacks its previous (resp. following) sentence.
  double absent_context_prob = 0.0;

  bool operator==(const ShapeConfig&) const = default;
};

// Throws InvalidShapeConfig.
void validate_shape(const ShapeConfig& shape);

// Invertible pitch <-> mel-bin code. Voiced frames store
// 0.5 + (log f0 - log f0_min) / (log f0_max - log f0_min) in `bin`; unvoiced
// frames store `unvoiced_code`. Codes above `threshold` decode as voiced.
struct PitchMap {
  int bin = 0;
  double f0_min = 60.0;
  double f0_max = 400.0;
  double unvoiced_code = -1.0;
  double threshold = 0.0;

  double encode(double f0_hz) const;
  // Returns 0 for unvoiced codes.
  double decode(double code) const;
  bool operator==(const PitchMap&) const = default;
};

// Normalisation statistics. The model works in z-scored log-mel, z-scored
// energy and z-scored log-F0 space.
struct CorpusStats {
  RowVector mel_mean;
  RowVector mel_std;
  double energy_mean = 0.0;
  double energy_std = 1.0;
  double logf0_mean = 0.0;
  double logf0_std = 1.0;
};

CorpusStats compute_stats(const std::vector<ContextSample>& samples);

struct CorpusInfo {
  std::uint64_t seed = 0;
  FrameRateConfig frame_cfg;
  ShapeConfig shape;
  PitchMap pitch_map;
  CorpusStats stats;
};

struct Corpus {
  CorpusInfo info;
  std::vector<ContextSample> samples;
};

class SyntheticGenerator {
 public:
  SyntheticGenerator(std::uint64_t seed, const FrameRateConfig& frame_cfg, const ShapeConfig& shape);

  // Deterministic in (seed, index); independent of generation order.
  ContextSample sample(std::uint64_t index) const;

  const PitchMap& pitch_map() const { return pitch_map_; }

 private:
  SentenceBundle sentence(std::mt19937_64& rng, Eigen::Index frame_offset, double logf0_base,
                          const std::array<double, 6>& affect) const;

  std::uint64_t seed_;
  FrameRateConfig frame_cfg_;
  ShapeConfig shape_;
  PitchMap pitch_map_;
  Matrix phoneme_latent_;  // vocab x L
  Matrix lip_proj_;        // L x d_lip
  Matrix face_proj_;       // (2 + L) x d_face
  Matrix mel_proj_;        // L x n_mels
  Matrix mel_subframe_;    // n x n_mels
  std::vector<double> pitch_offset_;
};

// Samples [first_index, first_index + count) of the generator; stats are
// computed over the generated samples.
Corpus generate_synthetic_corpus(std::uint64_t seed, int count, const FrameRateConfig& frame_cfg,
                                 const ShapeConfig& shape, std::uint64_t first_index = 0);

// Checks every sample invariant plus corpus-level consistency (ids inside the
// vocabulary, feature widths, pitch decodable from the mel).
void validate_corpus(const Corpus& corpus);

}  // namespace mcdub::data
