#pragma once

// Context Duration Aligner: phoneme and lip encoders over the concatenated
// {previous, current, following} sequences, cross-modal attention from lip
// frames to phonemes, and a strided transposed convolution that expands the
// aligned video-rate features to mel rate.

#include "mcdub/ad/autodiff.hpp"
#include "mcdub/data/types.hpp"
#include "mcdub/model_config.hpp"
#include "mcdub/nn/layers.hpp"

#include <span>
#include <vector>

namespace mcdub::cda {

// Per-head attention weights, each T_v x T_p and row-stochastic.
struct AlignmentMatrix {
  std::vector<Matrix> heads;

  Matrix mean() const;
};

struct AlignedFeatures {
  ad::Var h_lip_pho;  // T_v x D
  ad::Var t_lip_pho;  // (n * T_v) x D
  AlignmentMatrix alignment;
};

class TextEncoder {
 public:
  TextEncoder() = default;
  TextEncoder(nn::Initializer init, const ModelConfig& cfg);

  // Throws UnknownPhonemeId for ids outside the vocabulary.
  ad::Var operator()(std::span<const int> ids, const nn::Mode& mode) const;

 private:
  ad::Var embedding_;  // vocab x D
  nn::FftStack stack_;
  int dim_ = 0;
};

class LipEncoder {
 public:
  LipEncoder() = default;
  LipEncoder(nn::Initializer init, const ModelConfig& cfg);

  // Throws DimMismatch for an empty sequence or the wrong feature width.
  ad::Var operator()(const Matrix& lip_feats, const nn::Mode& mode) const;

 private:
  nn::Linear input_;  // D_lip -> D
  nn::FftStack stack_;
  int d_lip_ = 0;
  int dim_ = 0;
};

// 1-D transposed convolution with stride n. Output row t*n + j - crop gets
// x[t] * W_j; crop = (kernel - n) / 2 on the left and the total length is
// exactly n * T_v.
class MelUpsampler {
 public:
  MelUpsampler() = default;
  MelUpsampler(nn::Initializer init, int dim, int stride, int kernel);

  ad::Var operator()(const ad::Var& x) const;

  const ad::Var& weight() const { return weight_; }  // D x (kernel * D)
  const ad::Var& bias() const { return bias_; }
  int stride() const { return stride_; }
  int kernel() const { return kernel_; }

 private:
  ad::Var weight_;
  ad::Var bias_;
  int stride_ = 1;
  int kernel_ = 1;
};

struct AlignerOutput {
  ad::Var h_lip_pho;
  AlignmentMatrix alignment;
};

ad::Var encode_phonemes(std::span<const int> ids, const TextEncoder& encoder, const nn::Mode& mode = {});
ad::Var encode_lips(const Matrix& lip_feats, const LipEncoder& encoder, const nn::Mode& mode = {});

// Softmax(H_lip H_pho^T / sqrt(d)) H_pho, evaluated per head on column
// blocks of width D / heads (d = D / heads) and concatenated. With heads = 1
// this is the single-head form and H_lip_pho = A H_pho exactly.
AlignerOutput align_text_video(const ad::Var& h_lip, const ad::Var& h_pho, int heads);

ad::Var expand_to_mel(const ad::Var& h_lip_pho, const MelUpsampler& upsampler);

class ContextDurationAligner {
 public:
  ContextDurationAligner() = default;
  ContextDurationAligner(nn::Initializer init, const ModelConfig& cfg);

  const TextEncoder& text() const { return text_; }
  const LipEncoder& lips() const { return lips_; }
  const MelUpsampler& upsampler() const { return upsampler_; }
  int aligner_heads() const { return aligner_heads_; }

 private:
  TextEncoder text_;
  LipEncoder lips_;
  MelUpsampler upsampler_;
  int aligner_heads_ = 1;
};

// Full aligner over a selection. With current_text_only the phoneme input is
// restricted to the current sentence while lip frames keep their context.
AlignedFeatures run_cda(const data::SelectedContext& sel, const ContextDurationAligner& cda,
                        const nn::Mode& mode = {}, bool current_text_only = false);

}  // namespace mcdub::cda
