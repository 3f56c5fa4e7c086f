#include "mcdub/nn/layers.hpp"

#include "mcdub/errors.hpp"

#include <array>
#include <cmath>
#include <string>

namespace mcdub::nn {

Linear::Linear(Initializer init, int in, int out, bool bias) {
  weight_ = init.xavier("weight", in, out, in, out);
  if (bias) bias_ = init.zeros("bias", 1, out);
}

ad::Var Linear::operator()(const ad::Var& x) const {
  ad::Var y = ad::matmul(x, weight_);
  return bias_.valid() ? ad::add_row(y, bias_) : y;
}

Conv1d::Conv1d(Initializer init, int in, int out, int kernel) : kernel_(kernel) {
  if (kernel < 1 || kernel % 2 == 0) throw ConfigError("Conv1d kernel must be odd, got " + std::to_string(kernel));
  weight_ = init.xavier("weight", static_cast<Eigen::Index>(kernel) * in, out, kernel * in, kernel * out);
  bias_ = init.zeros("bias", 1, out);
}

ad::Var Conv1d::operator()(const ad::Var& x) const {
  ad::Var cols = kernel_ == 1 ? x : ad::unfold(x, kernel_, kernel_ / 2);
  return ad::add_row(ad::matmul(cols, weight_), bias_);
}

LayerNorm::LayerNorm(Initializer init, int dim) {
  gamma_ = init.ones("gamma", 1, dim);
  beta_ = init.zeros("beta", 1, dim);
}

ad::Var LayerNorm::operator()(const ad::Var& x) const { return ad::layer_norm(x, gamma_, beta_); }

MultiHeadSelfAttention::MultiHeadSelfAttention(Initializer init, int dim, int heads) : heads_(heads) {
  if (heads < 1 || dim % heads != 0) {
    throw ConfigError("model dim " + std::to_string(dim) + " not divisible by " + std::to_string(heads) + " heads");
  }
  wq_ = Linear(init.scope("wq"), dim, dim);
  wk_ = Linear(init.scope("wk"), dim, dim);
  wv_ = Linear(init.scope("wv"), dim, dim);
  wo_ = Linear(init.scope("wo"), dim, dim);
}

ad::Var MultiHeadSelfAttention::operator()(const ad::Var& x) const {
  const ad::Var q = wq_(x);
  const ad::Var k = wk_(x);
  const ad::Var v = wv_(x);
  const Eigen::Index head_dim = x.cols() / heads_;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(head_dim));
  std::vector<ad::Var> outs;
  outs.reserve(static_cast<size_t>(heads_));
  for (int h = 0; h < heads_; ++h) {
    const ad::Var qh = ad::slice_cols(q, h * head_dim, head_dim);
    const ad::Var kh = ad::slice_cols(k, h * head_dim, head_dim);
    const ad::Var vh = ad::slice_cols(v, h * head_dim, head_dim);
    const ad::Var weights = ad::softmax_rows(ad::scale(ad::matmul(qh, ad::transpose(kh)), inv_sqrt));
    outs.push_back(ad::matmul(weights, vh));
  }
  return wo_(heads_ == 1 ? outs.front() : ad::concat_cols(outs));
}

FftBlock::FftBlock(Initializer init, const FftBlockConfig& cfg) : dropout_(cfg.dropout) {
  ln_attn_ = LayerNorm(init.scope("ln_attn"), cfg.dim);
  attn_ = MultiHeadSelfAttention(init.scope("attn"), cfg.dim, cfg.heads);
  ln_ffn_ = LayerNorm(init.scope("ln_ffn"), cfg.dim);
  ffn_in_ = Conv1d(init.scope("ffn_in"), cfg.dim, cfg.ffn_dim, cfg.ffn_kernel_first);
  ffn_out_ = Conv1d(init.scope("ffn_out"), cfg.ffn_dim, cfg.dim, cfg.ffn_kernel_second);
}

ad::Var FftBlock::operator()(const ad::Var& x, const Mode& mode) const {
  ad::Var h = ad::add(x, ad::dropout(attn_(ln_attn_(x)), dropout_, mode.rng));
  ad::Var ffn = ffn_out_(ad::relu(ffn_in_(ln_ffn_(h))));
  return ad::add(h, ad::dropout(ffn, dropout_, mode.rng));
}

FftStack::FftStack(Initializer init, int n_blocks, const FftBlockConfig& cfg) {
  if (n_blocks < 1) throw ConfigError("FFT stack needs at least one block");
  for (int i = 0; i < n_blocks; ++i) blocks_.emplace_back(init.scope("block" + std::to_string(i)), cfg);
  final_ln_ = LayerNorm(init.scope("ln_out"), cfg.dim);
}

ad::Var FftStack::operator()(const ad::Var& x, const Mode& mode) const {
  ad::Var h = x;
  for (const auto& block : blocks_) h = block(h, mode);
  return final_ln_(h);
}

Matrix sinusoidal_positions(Eigen::Index length, int dim) {
  Matrix pe(length, dim);
  for (Eigen::Index pos = 0; pos < length; ++pos) {
    for (int i = 0; i < dim; ++i) {
      const double rate = std::pow(10000.0, -2.0 * static_cast<double>(i / 2) / dim);
      const double angle = static_cast<double>(pos) * rate;
      pe(pos, i) = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
  }
  return pe;
}

}  // namespace mcdub::nn
