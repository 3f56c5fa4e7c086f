#pragma once

// Building blocks shared by the encoders, predictors and decoder. All layers
// operate on (time x channels) sequences and hold their parameters as
// handles into a ParamStore.

#include "mcdub/ad/autodiff.hpp"
#include "mcdub/nn/params.hpp"

#include <random>
#include <vector>

namespace mcdub::nn {

// Forward-pass mode. A non-null rng enables dropout (training); null means
// evaluation.
struct Mode {
  std::mt19937_64* rng = nullptr;
  bool training() const { return rng != nullptr; }
};

class Linear {
 public:
  Linear() = default;
  Linear(Initializer init, int in, int out, bool bias = true);
  ad::Var operator()(const ad::Var& x) const;

  const ad::Var& weight() const { return weight_; }
  const ad::Var& bias() const { return bias_; }

 private:
  ad::Var weight_;  // in x out
  ad::Var bias_;    // 1 x out, invalid when disabled
};

// Same-padded 1-D convolution over time; kernel must be odd.
class Conv1d {
 public:
  Conv1d() = default;
  Conv1d(Initializer init, int in, int out, int kernel);
  ad::Var operator()(const ad::Var& x) const;

  const ad::Var& weight() const { return weight_; }

 private:
  ad::Var weight_;  // (kernel*in) x out
  ad::Var bias_;
  int kernel_ = 1;
};

class LayerNorm {
 public:
  LayerNorm() = default;
  LayerNorm(Initializer init, int dim);
  ad::Var operator()(const ad::Var& x) const;

 private:
  ad::Var gamma_;
  ad::Var beta_;
};

class MultiHeadSelfAttention {
 public:
  MultiHeadSelfAttention() = default;
  MultiHeadSelfAttention(Initializer init, int dim, int heads);
  ad::Var operator()(const ad::Var& x) const;

 private:
  Linear wq_, wk_, wv_, wo_;
  int heads_ = 1;
};

struct FftBlockConfig {
  int dim = 16;
  int heads = 2;
  int ffn_dim = 32;
  int ffn_kernel_first = 9;
  int ffn_kernel_second = 1;
  double dropout = 0.1;
};

// Feed-forward Transformer block, pre-norm:
//   x = x + Drop(MHSA(LN(x)));  x = x + Drop(Conv(ReLU(Conv(LN(x))))).
class FftBlock {
 public:
  FftBlock() = default;
  FftBlock(Initializer init, const FftBlockConfig& cfg);
  ad::Var operator()(const ad::Var& x, const Mode& mode) const;

 private:
  LayerNorm ln_attn_, ln_ffn_;
  MultiHeadSelfAttention attn_;
  Conv1d ffn_in_, ffn_out_;
  double dropout_ = 0.0;
};

// n FFT blocks followed by a final LayerNorm.
class FftStack {
 public:
  FftStack() = default;
  FftStack(Initializer init, int n_blocks, const FftBlockConfig& cfg);
  ad::Var operator()(const ad::Var& x, const Mode& mode) const;
  size_t depth() const { return blocks_.size(); }

 private:
  std::vector<FftBlock> blocks_;
  LayerNorm final_ln_;
};

// Sinusoidal absolute positional encoding table, length x dim.
Matrix sinusoidal_positions(Eigen::Index length, int dim);

}  // namespace mcdub::nn
