#include "mcdub/cda.hpp"

#include "mcdub/errors.hpp"

#include <cmath>
#include <string>

namespace mcdub::cda {

namespace {

nn::FftBlockConfig block_config(const ModelConfig& cfg) {
  return {cfg.dim, cfg.heads, cfg.ffn_dim, cfg.ffn_kernel_first, cfg.ffn_kernel_second, cfg.dropout};
}

}  // namespace

Matrix AlignmentMatrix::mean() const {
  Matrix m = heads.front();
  for (size_t h = 1; h < heads.size(); ++h) m += heads[h];
  return m / static_cast<double>(heads.size());
}

TextEncoder::TextEncoder(nn::Initializer init, const ModelConfig& cfg) : dim_(cfg.dim) {
  embedding_ = init.normal("embedding", cfg.vocab, cfg.dim, 1.0 / std::sqrt(static_cast<double>(cfg.dim)));
  stack_ = nn::FftStack(init.scope("fft"), cfg.text_blocks, block_config(cfg));
}

ad::Var TextEncoder::operator()(std::span<const int> ids, const nn::Mode& mode) const {
  if (ids.empty()) throw DimMismatch("phoneme sequence is empty");
  ad::Var x = ad::embedding(embedding_, ids);
  x = ad::add(x, ad::constant(nn::sinusoidal_positions(x.rows(), dim_)));
  return stack_(x, mode);
}

LipEncoder::LipEncoder(nn::Initializer init, const ModelConfig& cfg) : d_lip_(cfg.d_lip), dim_(cfg.dim) {
  input_ = nn::Linear(init.scope("input"), cfg.d_lip, cfg.dim);
  stack_ = nn::FftStack(init.scope("fft"), cfg.lip_blocks, block_config(cfg));
}

ad::Var LipEncoder::operator()(const Matrix& lip_feats, const nn::Mode& mode) const {
  if (lip_feats.rows() == 0) throw DimMismatch("lip sequence is empty (T_v=0)");
  if (lip_feats.cols() != d_lip_) {
    throw DimMismatch("lip feature width " + std::to_string(lip_feats.cols()) + " != D_lip " + std::to_string(d_lip_));
  }
  ad::Var x = input_(ad::constant(lip_feats));
  x = ad::add(x, ad::constant(nn::sinusoidal_positions(x.rows(), dim_)));
  return stack_(x, mode);
}

MelUpsampler::MelUpsampler(nn::Initializer init, int dim, int stride, int kernel) : stride_(stride), kernel_(kernel) {
  if (stride < 1 || kernel < stride) throw ConfigError("upsampler needs stride >= 1 and kernel >= stride");
  weight_ = init.xavier("weight", dim, static_cast<Eigen::Index>(kernel) * dim, dim * kernel / stride, dim);
  bias_ = init.zeros("bias", 1, dim);
}

ad::Var MelUpsampler::operator()(const ad::Var& x) const {
  const int crop = (kernel_ - stride_) / 2;
  ad::Var y = ad::overlap_add(ad::matmul(x, weight_), stride_, kernel_, crop, x.rows() * stride_);
  return ad::add_row(y, bias_);
}

ad::Var encode_phonemes(std::span<const int> ids, const TextEncoder& encoder, const nn::Mode& mode) {
  return encoder(ids, mode);
}

ad::Var encode_lips(const Matrix& lip_feats, const LipEncoder& encoder, const nn::Mode& mode) {
  return encoder(lip_feats, mode);
}

AlignerOutput align_text_video(const ad::Var& h_lip, const ad::Var& h_pho, int heads) {
  if (h_lip.cols() != h_pho.cols()) {
    throw DimMismatch("aligner inputs have widths " + std::to_string(h_lip.cols()) + " and " +
                      std::to_string(h_pho.cols()));
  }
  if (heads < 1 || h_lip.cols() % heads != 0) throw DimMismatch("model dim not divisible by aligner heads");
  const Eigen::Index d = h_lip.cols() / heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(d));
  AlignerOutput out;
  std::vector<ad::Var> parts;
  for (int h = 0; h < heads; ++h) {
    const ad::Var q = heads == 1 ? h_lip : ad::slice_cols(h_lip, h * d, d);
    const ad::Var v = heads == 1 ? h_pho : ad::slice_cols(h_pho, h * d, d);
    const ad::Var a = ad::softmax_rows(ad::scale(ad::matmul(q, ad::transpose(v)), inv_sqrt));
    out.alignment.heads.push_back(a.value());
    parts.push_back(ad::matmul(a, v));
  }
  out.h_lip_pho = heads == 1 ? parts.front() : ad::concat_cols(parts);
  return out;
}

ad::Var expand_to_mel(const ad::Var& h_lip_pho, const MelUpsampler& upsampler) { return upsampler(h_lip_pho); }

ContextDurationAligner::ContextDurationAligner(nn::Initializer init, const ModelConfig& cfg)
    : aligner_heads_(cfg.aligner_heads) {
  const ModelConfig c = cfg.resolved();
  text_ = TextEncoder(init.scope("text"), c);
  lips_ = LipEncoder(init.scope("lip"), c);
  upsampler_ = MelUpsampler(init.scope("upsample"), c.dim, c.frame_ratio, c.upsample_kernel);
}

AlignedFeatures run_cda(const data::SelectedContext& sel, const ContextDurationAligner& cda, const nn::Mode& mode,
                        bool current_text_only) {
  if (sel.n != cda.upsampler().stride()) {
    throw DimMismatch("selection frame ratio " + std::to_string(sel.n) + " != model frame ratio " +
                      std::to_string(cda.upsampler().stride()));
  }
  std::span<const int> ids(sel.phoneme_seq);
  if (current_text_only) {
    const data::Span cur = sel.bounds.phoneme[data::kCurrent];
    ids = ids.subspan(static_cast<size_t>(cur.begin), static_cast<size_t>(cur.size()));
  }
  const ad::Var h_pho = encode_phonemes(ids, cda.text(), mode);
  const ad::Var h_lip = encode_lips(sel.lip_seq, cda.lips(), mode);
  AlignerOutput aligned = align_text_video(h_lip, h_pho, cda.aligner_heads());
  AlignedFeatures out;
  out.h_lip_pho = aligned.h_lip_pho;
  out.t_lip_pho = expand_to_mel(aligned.h_lip_pho, cda.upsampler());
  out.alignment = std::move(aligned.alignment);
  return out;
}

}  // namespace mcdub::cda
