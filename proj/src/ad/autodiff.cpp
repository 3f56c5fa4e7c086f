#include "mcdub/ad/autodiff.hpp"

#include "mcdub/errors.hpp"

#include <cmath>
#include <string>
#include <unordered_set>

namespace mcdub::ad {

namespace {

using NodePtr = std::shared_ptr<Node>;

std::string shape_str(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require(bool ok, const char* op, const std::string& detail) {
  if (!ok) throw DimMismatch(std::string(op) + ": " + detail);
}

Var make(Matrix value, std::vector<NodePtr> parents, std::function<void(Node&)> fn) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  for (const auto& p : parents) node->requires_grad = node->requires_grad || p->requires_grad;
  if (node->requires_grad) {
    node->parents = std::move(parents);
    node->backward_fn = std::move(fn);
  }
  return Var(std::move(node));
}

}  // namespace

void Node::accumulate(const Matrix& g) {
  if (!requires_grad) return;
  if (grad.size() == 0) {
    grad = g;
  } else {
    grad += g;
  }
}

Matrix Var::grad() const {
  if (node_->grad.size() == 0) return Matrix::Zero(node_->value.rows(), node_->value.cols());
  return node_->grad;
}

Var constant(Matrix value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  return Var(std::move(node));
}

Var parameter(Matrix value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->requires_grad = true;
  return Var(std::move(node));
}

void backward(const Var& root) {
  require(root.rows() == 1 && root.cols() == 1, "backward", "root must be 1x1, got " + shape_str(root.value()));
  if (!root.requires_grad()) return;

  // Iterative post-order DFS gives a topological order without recursion
  // depth limits on long graphs.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, size_t>> stack{{root.node().get(), 0}};
  seen.insert(root.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (parent->requires_grad && seen.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root.node()->accumulate(Matrix::Ones(1, 1));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->backward_fn && node->grad.size() != 0) node->backward_fn(*node);
  }
  // Interior gradients are no longer needed; parameters keep theirs.
  for (Node* node : order) {
    if (node->backward_fn) node->grad.resize(0, 0);
  }
}

Var matmul(const Var& a, const Var& b) {
  require(a.cols() == b.rows(), "matmul", shape_str(a.value()) + " * " + shape_str(b.value()));
  Matrix out = a.value() * b.value();
  return make(std::move(out), {a.node(), b.node()}, [](Node& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    if (pa.requires_grad) pa.accumulate(self.grad * pb.value.transpose());
    if (pb.requires_grad) pb.accumulate(pa.value.transpose() * self.grad);
  });
}

Var transpose(const Var& x) {
  Matrix out = x.value().transpose();
  return make(std::move(out), {x.node()}, [](Node& self) {
    self.parents[0]->accumulate(self.grad.transpose());
  });
}

Var add(const Var& a, const Var& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "add",
          shape_str(a.value()) + " + " + shape_str(b.value()));
  Matrix out = a.value() + b.value();
  return make(std::move(out), {a.node(), b.node()}, [](Node& self) {
    self.parents[0]->accumulate(self.grad);
    self.parents[1]->accumulate(self.grad);
  });
}

Var sub(const Var& a, const Var& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "sub",
          shape_str(a.value()) + " - " + shape_str(b.value()));
  Matrix out = a.value() - b.value();
  return make(std::move(out), {a.node(), b.node()}, [](Node& self) {
    self.parents[0]->accumulate(self.grad);
    self.parents[1]->accumulate(-self.grad);
  });
}

Var scale(const Var& x, double s) {
  Matrix out = x.value() * s;
  return make(std::move(out), {x.node()}, [s](Node& self) { self.parents[0]->accumulate(self.grad * s); });
}

Var add_row(const Var& x, const Var& bias) {
  require(bias.rows() == 1 && bias.cols() == x.cols(), "add_row",
          shape_str(x.value()) + " + " + shape_str(bias.value()));
  Matrix out = x.value().rowwise() + bias.value().row(0);
  return make(std::move(out), {x.node(), bias.node()}, [](Node& self) {
    self.parents[0]->accumulate(self.grad);
    if (self.parents[1]->requires_grad) self.parents[1]->accumulate(self.grad.colwise().sum());
  });
}

Var tanh(const Var& x) {
  Matrix out = x.value().array().tanh().matrix();
  return make(std::move(out), {x.node()}, [](Node& self) {
    self.parents[0]->accumulate((self.grad.array() * (1.0 - self.value.array().square())).matrix());
  });
}

Var relu(const Var& x) {
  Matrix out = x.value().cwiseMax(0.0);
  return make(std::move(out), {x.node()}, [](Node& self) {
    const Matrix& in = self.parents[0]->value;
    self.parents[0]->accumulate((in.array() > 0.0).select(self.grad, 0.0).matrix());
  });
}

Var dropout(const Var& x, double p, std::mt19937_64* rng) {
  if (rng == nullptr || p <= 0.0) return x;
  std::bernoulli_distribution keep(1.0 - p);
  Matrix mask(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = keep(*rng) ? 1.0 / (1.0 - p) : 0.0;
  Matrix out = x.value().cwiseProduct(mask);
  return make(std::move(out), {x.node()}, [mask = std::move(mask)](Node& self) {
    self.parents[0]->accumulate(self.grad.cwiseProduct(mask));
  });
}

Var softmax_rows(const Var& x) {
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double m = x.value().row(r).maxCoeff();
    out.row(r) = (x.value().row(r).array() - m).exp().matrix();
    out.row(r) /= out.row(r).sum();
  }
  return make(std::move(out), {x.node()}, [](Node& self) {
    const Matrix& y = self.value;
    Vector dot = (self.grad.cwiseProduct(y)).rowwise().sum();
    Matrix g = y.cwiseProduct((self.grad.colwise() - dot));
    self.parents[0]->accumulate(g);
  });
}

Var softmax_cols(const Var& x) { return transpose(softmax_rows(transpose(x))); }

Var layer_norm(const Var& x, const Var& gamma, const Var& beta, double eps) {
  const Eigen::Index cols = x.cols();
  require(gamma.rows() == 1 && gamma.cols() == cols && beta.rows() == 1 && beta.cols() == cols, "layer_norm",
          "affine params must be 1x" + std::to_string(cols));
  Matrix xhat(x.rows(), cols);
  Vector inv_std(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mean = x.value().row(r).mean();
    const double var = (x.value().row(r).array() - mean).square().mean();
    inv_std(r) = 1.0 / std::sqrt(var + eps);
    xhat.row(r) = (x.value().row(r).array() - mean) * inv_std(r);
  }
  Matrix out = (xhat.array().rowwise() * gamma.value().row(0).array()).matrix();
  out.rowwise() += beta.value().row(0);
  return make(std::move(out), {x.node(), gamma.node(), beta.node()},
              [xhat = std::move(xhat), inv_std = std::move(inv_std)](Node& self) {
                auto& px = *self.parents[0];
                auto& pg = *self.parents[1];
                auto& pb = *self.parents[2];
                if (pg.requires_grad) pg.accumulate(self.grad.cwiseProduct(xhat).colwise().sum());
                if (pb.requires_grad) pb.accumulate(self.grad.colwise().sum());
                if (px.requires_grad) {
                  const double c = static_cast<double>(xhat.cols());
                  Matrix gxhat = (self.grad.array().rowwise() * pg.value.row(0).array()).matrix();
                  Vector mean_g = gxhat.rowwise().mean();
                  Vector mean_gx = gxhat.cwiseProduct(xhat).rowwise().sum() / c;
                  Matrix gx(xhat.rows(), xhat.cols());
                  for (Eigen::Index r = 0; r < xhat.rows(); ++r) {
                    gx.row(r) = inv_std(r) * (gxhat.row(r).array() - mean_g(r) - xhat.row(r).array() * mean_gx(r));
                  }
                  px.accumulate(gx);
                }
              });
}

Var concat_cols(std::span<const Var> parts) {
  require(!parts.empty(), "concat_cols", "no inputs");
  const Eigen::Index rows = parts.front().rows();
  Eigen::Index cols = 0;
  std::vector<NodePtr> parents;
  std::vector<Eigen::Index> widths;
  for (const auto& p : parts) {
    require(p.rows() == rows, "concat_cols", "row count " + std::to_string(p.rows()) + " != " + std::to_string(rows));
    cols += p.cols();
    parents.push_back(p.node());
    widths.push_back(p.cols());
  }
  Matrix out(rows, cols);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.middleCols(at, p.cols()) = p.value();
    at += p.cols();
  }
  return make(std::move(out), std::move(parents), [widths = std::move(widths)](Node& self) {
    Eigen::Index at = 0;
    for (size_t i = 0; i < widths.size(); ++i) {
      if (self.parents[i]->requires_grad) self.parents[i]->accumulate(self.grad.middleCols(at, widths[i]));
      at += widths[i];
    }
  });
}

Var concat_rows(std::span<const Var> parts) {
  require(!parts.empty(), "concat_rows", "no inputs");
  const Eigen::Index cols = parts.front().cols();
  Eigen::Index rows = 0;
  std::vector<NodePtr> parents;
  std::vector<Eigen::Index> heights;
  for (const auto& p : parts) {
    require(p.cols() == cols, "concat_rows", "column count " + std::to_string(p.cols()) + " != " + std::to_string(cols));
    rows += p.rows();
    parents.push_back(p.node());
    heights.push_back(p.rows());
  }
  Matrix out(rows, cols);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.middleRows(at, p.rows()) = p.value();
    at += p.rows();
  }
  return make(std::move(out), std::move(parents), [heights = std::move(heights)](Node& self) {
    Eigen::Index at = 0;
    for (size_t i = 0; i < heights.size(); ++i) {
      if (self.parents[i]->requires_grad) self.parents[i]->accumulate(self.grad.middleRows(at, heights[i]));
      at += heights[i];
    }
  });
}

Var slice_rows(const Var& x, Eigen::Index start, Eigen::Index count) {
  require(start >= 0 && count >= 0 && start + count <= x.rows(), "slice_rows",
          "[" + std::to_string(start) + ", +" + std::to_string(count) + ") of " + shape_str(x.value()));
  Matrix out = x.value().middleRows(start, count);
  return make(std::move(out), {x.node()}, [start](Node& self) {
    auto& p = *self.parents[0];
    Matrix g = Matrix::Zero(p.value.rows(), p.value.cols());
    g.middleRows(start, self.value.rows()) = self.grad;
    p.accumulate(g);
  });
}

Var slice_cols(const Var& x, Eigen::Index start, Eigen::Index count) {
  require(start >= 0 && count >= 0 && start + count <= x.cols(), "slice_cols",
          "[" + std::to_string(start) + ", +" + std::to_string(count) + ") of " + shape_str(x.value()));
  Matrix out = x.value().middleCols(start, count);
  return make(std::move(out), {x.node()}, [start](Node& self) {
    auto& p = *self.parents[0];
    Matrix g = Matrix::Zero(p.value.rows(), p.value.cols());
    g.middleCols(start, self.value.cols()) = self.grad;
    p.accumulate(g);
  });
}

Var repeat_rows(const Var& x, int times) {
  require(times >= 1, "repeat_rows", "times must be >= 1");
  Matrix out(x.rows() * times, x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    for (int j = 0; j < times; ++j) out.row(r * times + j) = x.value().row(r);
  }
  return make(std::move(out), {x.node()}, [times](Node& self) {
    auto& p = *self.parents[0];
    Matrix g = Matrix::Zero(p.value.rows(), p.value.cols());
    for (Eigen::Index r = 0; r < g.rows(); ++r) {
      for (int j = 0; j < times; ++j) g.row(r) += self.grad.row(r * times + j);
    }
    p.accumulate(g);
  });
}

Var unfold(const Var& x, int kernel, int pad) {
  require(kernel >= 1 && pad >= 0, "unfold", "bad kernel/pad");
  const Eigen::Index t_len = x.rows();
  const Eigen::Index c = x.cols();
  Matrix out = Matrix::Zero(t_len, kernel * c);
  for (Eigen::Index t = 0; t < t_len; ++t) {
    for (int j = 0; j < kernel; ++j) {
      const Eigen::Index src = t - pad + j;
      if (src >= 0 && src < t_len) out.block(t, j * c, 1, c) = x.value().row(src);
    }
  }
  return make(std::move(out), {x.node()}, [kernel, pad, c](Node& self) {
    auto& p = *self.parents[0];
    const Eigen::Index t_len = p.value.rows();
    Matrix g = Matrix::Zero(t_len, c);
    for (Eigen::Index t = 0; t < t_len; ++t) {
      for (int j = 0; j < kernel; ++j) {
        const Eigen::Index src = t - pad + j;
        if (src >= 0 && src < t_len) g.row(src) += self.grad.block(t, j * c, 1, c);
      }
    }
    p.accumulate(g);
  });
}

Var overlap_add(const Var& p, int stride, int kernel, int crop_left, Eigen::Index out_len) {
  require(stride >= 1 && kernel >= 1 && p.cols() % kernel == 0, "overlap_add",
          "columns " + std::to_string(p.cols()) + " not divisible by kernel " + std::to_string(kernel));
  const Eigen::Index c = p.cols() / kernel;
  Matrix out = Matrix::Zero(out_len, c);
  for (Eigen::Index t = 0; t < p.rows(); ++t) {
    for (int j = 0; j < kernel; ++j) {
      const Eigen::Index dst = t * stride + j - crop_left;
      if (dst >= 0 && dst < out_len) out.row(dst) += p.value().block(t, j * c, 1, c);
    }
  }
  return make(std::move(out), {p.node()}, [stride, kernel, crop_left, c](Node& self) {
    auto& parent = *self.parents[0];
    const Eigen::Index out_len = self.value.rows();
    Matrix g = Matrix::Zero(parent.value.rows(), parent.value.cols());
    for (Eigen::Index t = 0; t < g.rows(); ++t) {
      for (int j = 0; j < kernel; ++j) {
        const Eigen::Index dst = t * stride + j - crop_left;
        if (dst >= 0 && dst < out_len) g.block(t, j * c, 1, c) = self.grad.row(dst);
      }
    }
    parent.accumulate(g);
  });
}

Var embedding(const Var& table, std::span<const int> ids) {
  Matrix out(static_cast<Eigen::Index>(ids.size()), table.cols());
  for (size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= table.rows()) {
      throw UnknownPhonemeId("id " + std::to_string(ids[i]) + " outside vocabulary of " +
                             std::to_string(table.rows()));
    }
    out.row(static_cast<Eigen::Index>(i)) = table.value().row(ids[i]);
  }
  std::vector<int> idx(ids.begin(), ids.end());
  return make(std::move(out), {table.node()}, [idx = std::move(idx)](Node& self) {
    auto& p = *self.parents[0];
    Matrix g = Matrix::Zero(p.value.rows(), p.value.cols());
    for (size_t i = 0; i < idx.size(); ++i) g.row(idx[i]) += self.grad.row(static_cast<Eigen::Index>(i));
    p.accumulate(g);
  });
}

Var additive_scores(const Var& q, const Var& keys, const Var& b, const Var& w) {
  const Eigen::Index d = q.cols();
  require(keys.cols() == d && b.rows() == 1 && b.cols() == d && w.rows() == d && w.cols() == 1, "additive_scores",
          "q " + shape_str(q.value()) + ", keys " + shape_str(keys.value()) + ", b " + shape_str(b.value()) +
              ", w " + shape_str(w.value()));
  const Eigen::Index tq = q.rows();
  const Eigen::Index tk = keys.rows();
  Matrix out(tq, tk);
  const RowVector wrow = w.value().col(0).transpose();
  for (Eigen::Index i = 0; i < tq; ++i) {
    const RowVector qi = q.value().row(i) + b.value().row(0);
    for (Eigen::Index k = 0; k < tk; ++k) {
      out(i, k) = ((qi + keys.value().row(k)).array().tanh() * wrow.array()).sum();
    }
  }
  return make(std::move(out), {q.node(), keys.node(), b.node(), w.node()}, [](Node& self) {
    auto& pq = *self.parents[0];
    auto& pk = *self.parents[1];
    auto& pb = *self.parents[2];
    auto& pw = *self.parents[3];
    const Eigen::Index tq = pq.value.rows();
    const Eigen::Index tk = pk.value.rows();
    const Eigen::Index d = pq.value.cols();
    Matrix gq = Matrix::Zero(tq, d);
    Matrix gk = Matrix::Zero(tk, d);
    RowVector gsum = RowVector::Zero(d);
    RowVector gw = RowVector::Zero(d);
    const RowVector wrow = pw.value.col(0).transpose();
    for (Eigen::Index i = 0; i < tq; ++i) {
      const RowVector qi = pq.value.row(i) + pb.value.row(0);
      for (Eigen::Index k = 0; k < tk; ++k) {
        const double g = self.grad(i, k);
        if (g == 0.0) continue;
        const RowVector h = (qi + pk.value.row(k)).array().tanh().matrix();
        const RowVector dpre = (g * wrow.array() * (1.0 - h.array().square())).matrix();
        gq.row(i) += dpre;
        gk.row(k) += dpre;
        gsum += dpre;
        gw += g * h;
      }
    }
    if (pq.requires_grad) pq.accumulate(gq);
    if (pk.requires_grad) pk.accumulate(gk);
    if (pb.requires_grad) pb.accumulate(gsum);
    if (pw.requires_grad) pw.accumulate(gw.transpose());
  });
}

Var sum(const Var& x) {
  Matrix out(1, 1);
  out(0, 0) = x.value().sum();
  return make(std::move(out), {x.node()}, [](Node& self) {
    auto& p = *self.parents[0];
    p.accumulate(Matrix::Constant(p.value.rows(), p.value.cols(), self.grad(0, 0)));
  });
}

Var masked_mse(const Var& pred, const Matrix& target, const Matrix& mask) {
  require(pred.rows() == target.rows() && pred.cols() == target.cols(), "masked_mse",
          shape_str(pred.value()) + " vs " + shape_str(target));
  const bool use_mask = mask.size() != 0;
  if (use_mask) {
    require(mask.rows() == target.rows() && mask.cols() == target.cols(), "masked_mse", "mask shape");
  }
  Matrix weight = use_mask ? Matrix((mask.array() != 0.0).cast<double>()) : Matrix::Ones(target.rows(), target.cols());
  const double count = weight.sum();
  Matrix diff = (pred.value() - target).cwiseProduct(weight);
  Matrix out(1, 1);
  out(0, 0) = count > 0.0 ? diff.squaredNorm() / count : 0.0;
  return make(std::move(out), {pred.node()}, [diff = std::move(diff), count](Node& self) {
    if (count > 0.0) self.parents[0]->accumulate(diff * (2.0 * self.grad(0, 0) / count));
  });
}

Var mae(const Var& pred, const Matrix& target) {
  require(pred.rows() == target.rows() && pred.cols() == target.cols(), "mae",
          shape_str(pred.value()) + " vs " + shape_str(target));
  const double count = static_cast<double>(target.size());
  Matrix diff = pred.value() - target;
  Matrix out(1, 1);
  out(0, 0) = count > 0.0 ? diff.cwiseAbs().sum() / count : 0.0;
  Matrix sign = diff.unaryExpr([](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
  return make(std::move(out), {pred.node()}, [sign = std::move(sign), count](Node& self) {
    if (count > 0.0) self.parents[0]->accumulate(sign * (self.grad(0, 0) / count));
  });
}

}  // namespace mcdub::ad
