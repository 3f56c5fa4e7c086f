#pragma once

// Context Prosody Predictor. Arousal and valence features (learned
// projections of the face features) query the mel-rate lip-phoneme features
// through additive attention; the fused video-rate representations drive an
// energy and a pitch predictor and, repeated to mel rate, form the prosody
// context fed to the decoder.

#include "mcdub/ad/autodiff.hpp"
#include "mcdub/model_config.hpp"
#include "mcdub/nn/layers.hpp"
#include "mcdub/prosody_track.hpp"

namespace mcdub::prosody {

// alpha_hat[i,k] = w_a^T tanh(W_a^T q_i + U_a^T key_k + b_a)
class AdditiveAttention {
 public:
  AdditiveAttention() = default;
  AdditiveAttention(nn::Initializer init, int dim);

  const ad::Var& w_a() const { return w_a_; }  // D x 1
  const ad::Var& W_a() const { return W_a_; }  // D x D
  const ad::Var& U_a() const { return U_a_; }  // D x D
  const ad::Var& b_a() const { return b_a_; }  // 1 x D

 private:
  ad::Var w_a_, W_a_, U_a_, b_a_;
};

struct FusedAffect {
  ad::Var h;      // T_v x D
  ad::Var alpha;  // T_v x T_mel, row-stochastic
};

// H_i = sum_k alpha[i,k] keys_k with alpha = softmax_k(alpha_hat[i,k]).
FusedAffect fuse_affect(const ad::Var& queries, const ad::Var& keys, const AdditiveAttention& params);

// 2 x (conv -> ReLU -> LayerNorm -> dropout) -> linear to one scalar per frame.
class VariancePredictor {
 public:
  VariancePredictor() = default;
  VariancePredictor(nn::Initializer init, int in_dim, int channels, int kernel, double dropout);

  // T x in_dim -> T x 1
  ad::Var operator()(const ad::Var& x, const nn::Mode& mode) const;

  const nn::Conv1d& conv1() const { return conv1_; }
  const nn::Conv1d& conv2() const { return conv2_; }
  const nn::Linear& head() const { return head_; }

 private:
  nn::Conv1d conv1_, conv2_;
  nn::LayerNorm ln1_, ln2_;
  nn::Linear head_;
  double dropout_ = 0.0;
};

// Video-rate prediction repeated n times to mel rate: (n * T_v) x 1.
ad::Var predict_energy(const ad::Var& h_t_aro, const VariancePredictor& predictor, int n, const nn::Mode& mode = {});
// Same contract; values live in normalised log-F0 space.
ad::Var predict_pitch(const ad::Var& h_t_val, const VariancePredictor& predictor, int n, const nn::Mode& mode = {});

ProsodyTrack to_track(const ad::Var& column);

struct ProsodyFeatures {
  ad::Var h_t_aro;  // T_v x D
  ad::Var h_t_val;  // T_v x D
  ad::Var concat;   // T_v x 2D
};

struct CppOutput {
  ProsodyFeatures features;
  ad::Var context;  // (n * T_v) x 2D, the decoder-facing prosody context
  ad::Var energy;   // (n * T_v) x 1
  ad::Var pitch;    // (n * T_v) x 1
  Matrix alpha_aro;
  Matrix alpha_val;
};

class ContextProsodyPredictor {
 public:
  ContextProsodyPredictor() = default;
  ContextProsodyPredictor(nn::Initializer init, const ModelConfig& cfg);

  const nn::Linear& arousal_proj() const { return arousal_; }
  const nn::Linear& valence_proj() const { return valence_; }
  const AdditiveAttention& arousal_attention() const { return att_aro_; }
  const AdditiveAttention& valence_attention() const { return att_val_; }
  const VariancePredictor& energy_predictor() const { return energy_; }
  const VariancePredictor& pitch_predictor() const { return pitch_; }
  int d_face() const { return d_face_; }

 private:
  nn::Linear arousal_, valence_;
  AdditiveAttention att_aro_, att_val_;
  VariancePredictor energy_, pitch_;
  int d_face_ = 0;
};

// face_seq is T_v x D_face; t_lip_pho is (n * T_v) x D.
CppOutput run_cpp(const Matrix& face_seq, const ad::Var& t_lip_pho, const ContextProsodyPredictor& cpp, int n,
                  const nn::Mode& mode = {});

}  // namespace mcdub::prosody
