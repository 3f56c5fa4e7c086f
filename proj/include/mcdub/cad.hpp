#pragma once

// Context Acoustic Decoder: mel decoder over [T_lip_pho ; prosody context],
// double attention over [F_mel ; masked ground-truth context mel], and a
// residual convolutional postnet.

#include "mcdub/ad/autodiff.hpp"
#include "mcdub/data/types.hpp"
#include "mcdub/model_config.hpp"
#include "mcdub/nn/layers.hpp"

#include <vector>

namespace mcdub::cad {

class MelDecoder {
 public:
  MelDecoder() = default;
  MelDecoder(nn::Initializer init, const ModelConfig& cfg);

  // T_mel x 3D -> T_mel x n_mels
  ad::Var operator()(const ad::Var& features, const nn::Mode& mode) const;

 private:
  nn::Linear input_;  // 3D -> D
  nn::FftStack stack_;
  nn::Linear head_;  // D -> n_mels
  int in_dim_ = 0;
  int dim_ = 0;
};

ad::Var decode_mel(const ad::Var& features, const MelDecoder& decoder, const nn::Mode& mode = {});

// Gather: G descriptors, each a softmax-over-positions weighted sum of
// projected features. Distribute: each position takes a softmax-over-
// descriptors mixture of them. All projections are 1x1 (per frame).
class DoubleAttention {
 public:
  DoubleAttention() = default;
  DoubleAttention(nn::Initializer init, int in_dim, int out_dim, int descriptors);

  const nn::Linear& feature_proj() const { return feature_; }
  const nn::Linear& gather_proj() const { return gather_; }
  const nn::Linear& distribute_proj() const { return distribute_; }
  const nn::Linear& out_proj() const { return out_; }
  int descriptors() const { return descriptors_; }
  int in_dim() const { return in_dim_; }

 private:
  nn::Linear feature_, gather_, distribute_, out_;
  int descriptors_ = 1;
  int in_dim_ = 0;
};

struct DoubleAttentionOutput {
  ad::Var z;                   // T x D_dab
  ad::Var gather_weights;      // T x G, each column sums to 1
  ad::Var descriptors;         // G x D_dab
  ad::Var distribute_weights;  // T x G, each row sums to 1
  ad::Var distributed;         // T x D_dab, before the output projection
};

DoubleAttentionOutput double_attention(const ad::Var& x, const DoubleAttention& params);

// Y = F + residual(conv stack over input_proj([Z ; F])). The last conv layer
// starts at zero so Y == F at initialisation.
class Postnet {
 public:
  Postnet() = default;
  Postnet(nn::Initializer init, int z_dim, int n_mels, int channels, int kernel, int layers, double dropout);

  const std::vector<nn::Conv1d>& convs() const { return convs_; }

 private:
  friend ad::Var postnet_refine(const ad::Var&, const ad::Var&, const Postnet&, const nn::Mode&);
  nn::Linear input_;
  std::vector<nn::Conv1d> convs_;
  double dropout_ = 0.0;
};

ad::Var postnet_refine(const ad::Var& f_mel, const ad::Var& z, const Postnet& postnet, const nn::Mode& mode = {});

// Rows [cur.begin, cur.end) of the mel-coordinate current segment. Throws
// BoundsOutOfRange.
Matrix extract_current(const Matrix& mel, const data::SegmentBounds& bounds);

class ContextAcousticDecoder {
 public:
  ContextAcousticDecoder() = default;
  ContextAcousticDecoder(nn::Initializer init, const ModelConfig& cfg);

  const MelDecoder& decoder() const { return decoder_; }
  const DoubleAttention& dab() const { return dab_; }
  const Postnet& postnet() const { return postnet_; }

 private:
  MelDecoder decoder_;
  DoubleAttention dab_;
  Postnet postnet_;
};

struct CadOutput {
  ad::Var f_mel;  // coarse decoder output
  DoubleAttentionOutput dab;
  ad::Var y_mel;  // refined global context mel
};

// features: T_mel x 3D; masked_mel: T_mel x n_mels.
CadOutput run_cad(const ad::Var& features, const Matrix& masked_mel, const ContextAcousticDecoder& cad,
                  const nn::Mode& mode = {});

}  // namespace mcdub::cad
