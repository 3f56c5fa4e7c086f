#pragma once

// Reverse-mode automatic differentiation over dense row-major matrices.
//
// Every sequence in the model is a 2-D (time x channels) matrix, so the tape
// only needs matrix-valued nodes. A forward pass builds a DAG of nodes held by
// shared_ptr; backward() walks it in reverse topological order. Parameters are
// long-lived leaf nodes whose grad accumulates across backward calls until
// zero_grad().

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <vector>

namespace mcdub {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

namespace ad {

struct Node {
  Matrix value;
  Matrix grad;  // empty until something flows into it
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;

  void accumulate(const Matrix& g);
};

class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  const Matrix& value() const { return node_->value; }
  Matrix& mutable_value() { return node_->value; }
  // Zero matrix of the right shape when no gradient has reached this node.
  Matrix grad() const;
  bool requires_grad() const { return node_ && node_->requires_grad; }
  Eigen::Index rows() const { return node_->value.rows(); }
  Eigen::Index cols() const { return node_->value.cols(); }
  double scalar() const { return node_->value(0, 0); }
  bool valid() const { return static_cast<bool>(node_); }
  void zero_grad() { node_->grad.resize(0, 0); }

  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

Var constant(Matrix value);
Var parameter(Matrix value);

// Accumulates d(root)/d(node) into every reachable node that requires grad.
// root must be 1x1.
void backward(const Var& root);

// --- linear algebra -------------------------------------------------------
Var matmul(const Var& a, const Var& b);
Var transpose(const Var& x);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var scale(const Var& x, double s);
// x (T x C) + bias (1 x C) broadcast over rows.
Var add_row(const Var& x, const Var& bias);

// --- pointwise ------------------------------------------------------------
Var tanh(const Var& x);
Var relu(const Var& x);
// Inverted dropout; identity when rng is null or p == 0.
Var dropout(const Var& x, double p, std::mt19937_64* rng);

// --- normalisation --------------------------------------------------------
Var softmax_rows(const Var& x);
Var softmax_cols(const Var& x);
Var layer_norm(const Var& x, const Var& gamma, const Var& beta, double eps = 1e-5);

// --- shape ----------------------------------------------------------------
Var concat_cols(std::span<const Var> parts);
Var concat_rows(std::span<const Var> parts);
Var slice_rows(const Var& x, Eigen::Index start, Eigen::Index count);
Var slice_cols(const Var& x, Eigen::Index start, Eigen::Index count);
// Each row repeated `times` times consecutively.
Var repeat_rows(const Var& x, int times);
// Row t of the result is [x[t-pad], ..., x[t-pad+k-1]] with zero rows outside
// the sequence; output is T x (k*C). Together with matmul this is a 1-D conv.
Var unfold(const Var& x, int kernel, int pad);
// Inverse layout of a strided transposed convolution. p is T x (k*C); block j
// of row t lands on output row t*stride + j - crop_left. Rows outside
// [0, out_len) are dropped.
Var overlap_add(const Var& p, int stride, int kernel, int crop_left, Eigen::Index out_len);
Var embedding(const Var& table, std::span<const int> ids);

// --- attention ------------------------------------------------------------
// S[i,k] = sum_d w[d] * tanh(q[i,d] + k[k,d] + b[d]); q is Tq x D, keys
// Tk x D, b is 1 x D and w is D x 1.
Var additive_scores(const Var& q, const Var& keys, const Var& b, const Var& w);

// --- losses (1x1 results) -------------------------------------------------
Var sum(const Var& x);
// Mean of (pred - target)^2 over entries where mask != 0; zero if the mask is
// empty. mask may be an empty matrix meaning "all entries".
Var masked_mse(const Var& pred, const Matrix& target, const Matrix& mask);
Var mae(const Var& pred, const Matrix& target);

}  // namespace ad
}  // namespace mcdub
