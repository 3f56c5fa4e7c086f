#include "mcdub/prosody.hpp"

#include "mcdub/errors.hpp"

#include <array>
#include <string>

namespace mcdub::prosody {

AdditiveAttention::AdditiveAttention(nn::Initializer init, int dim) {
  w_a_ = init.xavier("w_a", dim, 1, dim, 1);
  W_a_ = init.xavier("W_a", dim, dim, dim, dim);
  U_a_ = init.xavier("U_a", dim, dim, dim, dim);
  b_a_ = init.zeros("b_a", 1, dim);
}

FusedAffect fuse_affect(const ad::Var& queries, const ad::Var& keys, const AdditiveAttention& p) {
  const Eigen::Index d = p.W_a().rows();
  if (queries.cols() != d || keys.cols() != d) {
    throw DimMismatch("additive attention expects width " + std::to_string(d) + ", got " +
                      std::to_string(queries.cols()) + " and " + std::to_string(keys.cols()));
  }
  if (keys.rows() == 0) throw DimMismatch("additive attention has no keys");
  // Row i of queries * W_a is (W_a^T q_i)^T; likewise for the keys.
  const ad::Var scores = ad::additive_scores(ad::matmul(queries, p.W_a()), ad::matmul(keys, p.U_a()), p.b_a(), p.w_a());
  const ad::Var alpha = ad::softmax_rows(scores);
  return {ad::matmul(alpha, keys), alpha};
}

VariancePredictor::VariancePredictor(nn::Initializer init, int in_dim, int channels, int kernel, double dropout)
    : dropout_(dropout) {
  conv1_ = nn::Conv1d(init.scope("conv1"), in_dim, channels, kernel);
  ln1_ = nn::LayerNorm(init.scope("ln1"), channels);
  conv2_ = nn::Conv1d(init.scope("conv2"), channels, channels, kernel);
  ln2_ = nn::LayerNorm(init.scope("ln2"), channels);
  head_ = nn::Linear(init.scope("head"), channels, 1);
}

ad::Var VariancePredictor::operator()(const ad::Var& x, const nn::Mode& mode) const {
  ad::Var h = ad::dropout(ln1_(ad::relu(conv1_(x))), dropout_, mode.rng);
  h = ad::dropout(ln2_(ad::relu(conv2_(h))), dropout_, mode.rng);
  return head_(h);
}

ad::Var predict_energy(const ad::Var& h_t_aro, const VariancePredictor& predictor, int n, const nn::Mode& mode) {
  return ad::repeat_rows(predictor(h_t_aro, mode), n);
}

ad::Var predict_pitch(const ad::Var& h_t_val, const VariancePredictor& predictor, int n, const nn::Mode& mode) {
  return ad::repeat_rows(predictor(h_t_val, mode), n);
}

ProsodyTrack to_track(const ad::Var& column) {
  ProsodyTrack track;
  track.values.assign(column.value().data(), column.value().data() + column.value().size());
  return track;
}

ContextProsodyPredictor::ContextProsodyPredictor(nn::Initializer init, const ModelConfig& cfg) : d_face_(cfg.d_face) {
  const ModelConfig c = cfg.resolved();
  arousal_ = nn::Linear(init.scope("arousal"), c.d_face, c.dim);
  valence_ = nn::Linear(init.scope("valence"), c.d_face, c.dim);
  att_aro_ = AdditiveAttention(init.scope("att_aro"), c.dim);
  att_val_ = AdditiveAttention(init.scope("att_val"), c.dim);
  energy_ = VariancePredictor(init.scope("energy"), c.dim, c.predictor_channels, c.predictor_kernel,
                              c.predictor_dropout);
  pitch_ = VariancePredictor(init.scope("pitch"), c.dim, c.predictor_channels, c.predictor_kernel,
                             c.predictor_dropout);
}

CppOutput run_cpp(const Matrix& face_seq, const ad::Var& t_lip_pho, const ContextProsodyPredictor& cpp, int n,
                  const nn::Mode& mode) {
  if (face_seq.cols() != cpp.d_face()) {
    throw DimMismatch("face feature width " + std::to_string(face_seq.cols()) + " != D_face " +
                      std::to_string(cpp.d_face()));
  }
  if (face_seq.rows() * n != t_lip_pho.rows()) {
    throw DimMismatch("face frames * n (" + std::to_string(face_seq.rows() * n) + ") != mel frames " +
                      std::to_string(t_lip_pho.rows()));
  }
  const ad::Var face = ad::constant(face_seq);
  const FusedAffect aro = fuse_affect(cpp.arousal_proj()(face), t_lip_pho, cpp.arousal_attention());
  const FusedAffect val = fuse_affect(cpp.valence_proj()(face), t_lip_pho, cpp.valence_attention());

  CppOutput out;
  out.features.h_t_aro = aro.h;
  out.features.h_t_val = val.h;
  const std::array<ad::Var, 2> parts{aro.h, val.h};
  out.features.concat = ad::concat_cols(parts);
  out.context = ad::repeat_rows(out.features.concat, n);
  out.energy = predict_energy(aro.h, cpp.energy_predictor(), n, mode);
  out.pitch = predict_pitch(val.h, cpp.pitch_predictor(), n, mode);
  out.alpha_aro = aro.alpha.value();
  out.alpha_val = val.alpha.value();
  return out;
}

}  // namespace mcdub::prosody
