#include "mcdub/cad.hpp"

#include "mcdub/errors.hpp"

#include <array>
#include <string>

namespace mcdub::cad {

MelDecoder::MelDecoder(nn::Initializer init, const ModelConfig& cfg) : in_dim_(3 * cfg.dim), dim_(cfg.dim) {
  input_ = nn::Linear(init.scope("input"), 3 * cfg.dim, cfg.dim);
  stack_ = nn::FftStack(init.scope("fft"), cfg.decoder_blocks,
                        {cfg.dim, cfg.heads, cfg.ffn_dim, cfg.ffn_kernel_first, cfg.ffn_kernel_second, cfg.dropout});
  head_ = nn::Linear(init.scope("head"), cfg.dim, cfg.n_mels);
}

ad::Var MelDecoder::operator()(const ad::Var& features, const nn::Mode& mode) const {
  if (features.cols() != in_dim_) {
    throw DimMismatch("decoder input width " + std::to_string(features.cols()) + " != 3D = " +
                      std::to_string(in_dim_));
  }
  ad::Var x = input_(features);
  x = ad::add(x, ad::constant(nn::sinusoidal_positions(x.rows(), dim_)));
  return head_(stack_(x, mode));
}

ad::Var decode_mel(const ad::Var& features, const MelDecoder& decoder, const nn::Mode& mode) {
  return decoder(features, mode);
}

DoubleAttention::DoubleAttention(nn::Initializer init, int in_dim, int out_dim, int descriptors)
    : descriptors_(descriptors), in_dim_(in_dim) {
  feature_ = nn::Linear(init.scope("feature"), in_dim, out_dim);
  gather_ = nn::Linear(init.scope("gather"), in_dim, descriptors);
  distribute_ = nn::Linear(init.scope("distribute"), in_dim, descriptors);
  out_ = nn::Linear(init.scope("out"), out_dim, out_dim);
}

DoubleAttentionOutput double_attention(const ad::Var& x, const DoubleAttention& p) {
  if (x.cols() != p.in_dim()) {
    throw DimMismatch("double attention input width " + std::to_string(x.cols()) + " != " +
                      std::to_string(p.in_dim()));
  }
  DoubleAttentionOutput out;
  const ad::Var features = p.feature_proj()(x);
  out.gather_weights = ad::softmax_cols(p.gather_proj()(x));
  out.descriptors = ad::matmul(ad::transpose(out.gather_weights), features);
  out.distribute_weights = ad::softmax_rows(p.distribute_proj()(x));
  out.distributed = ad::matmul(out.distribute_weights, out.descriptors);
  out.z = p.out_proj()(out.distributed);
  return out;
}

Postnet::Postnet(nn::Initializer init, int z_dim, int n_mels, int channels, int kernel, int layers, double dropout)
    : dropout_(dropout) {
  input_ = nn::Linear(init.scope("input"), z_dim + n_mels, channels);
  for (int i = 0; i < layers; ++i) {
    const bool last = i + 1 == layers;
    convs_.emplace_back(init.scope("conv" + std::to_string(i)), channels, last ? n_mels : channels, kernel);
    if (last) convs_.back().weight().node()->value.setZero();
  }
}

ad::Var postnet_refine(const ad::Var& f_mel, const ad::Var& z, const Postnet& postnet, const nn::Mode& mode) {
  if (z.rows() != f_mel.rows()) throw DimMismatch("postnet inputs differ in length");
  const std::array<ad::Var, 2> parts{z, f_mel};
  ad::Var h = postnet.input_(ad::concat_cols(parts));
  for (size_t i = 0; i < postnet.convs_.size(); ++i) {
    h = postnet.convs_[i](h);
    if (i + 1 < postnet.convs_.size()) h = ad::dropout(ad::tanh(h), postnet.dropout_, mode.rng);
  }
  if (h.cols() != f_mel.cols()) throw DimMismatch("postnet output width differs from mel width");
  return ad::add(f_mel, h);
}

Matrix extract_current(const Matrix& mel, const data::SegmentBounds& bounds) {
  const data::Span cur = bounds.mel[data::kCurrent];
  if (cur.begin < 0 || cur.end < cur.begin || cur.end > mel.rows()) {
    throw BoundsOutOfRange("current segment [" + std::to_string(cur.begin) + ", " + std::to_string(cur.end) +
                           ") outside mel of " + std::to_string(mel.rows()) + " frames");
  }
  return mel.middleRows(cur.begin, cur.size());
}

ContextAcousticDecoder::ContextAcousticDecoder(nn::Initializer init, const ModelConfig& cfg) {
  const ModelConfig c = cfg.resolved();
  decoder_ = MelDecoder(init.scope("decoder"), c);
  dab_ = DoubleAttention(init.scope("dab"), 2 * c.n_mels, c.dab_dim, c.dab_descriptors);
  postnet_ = Postnet(init.scope("postnet"), c.dab_dim, c.n_mels, c.postnet_channels, c.postnet_kernel,
                     c.postnet_layers, c.dropout);
}

CadOutput run_cad(const ad::Var& features, const Matrix& masked_mel, const ContextAcousticDecoder& cad,
                  const nn::Mode& mode) {
  CadOutput out;
  out.f_mel = decode_mel(features, cad.decoder(), mode);
  if (masked_mel.rows() != out.f_mel.rows() || masked_mel.cols() != out.f_mel.cols()) {
    throw DimMismatch("masked context mel shape differs from decoder output");
  }
  const std::array<ad::Var, 2> parts{out.f_mel, ad::constant(masked_mel)};
  out.dab = double_attention(ad::concat_cols(parts), cad.dab());
  out.y_mel = postnet_refine(out.f_mel, out.dab.z, cad.postnet(), mode);
  return out;
}

}  // namespace mcdub::cad
