#include "mcdub/nn/params.hpp"

#include "mcdub/errors.hpp"

#include <cmath>

namespace mcdub::nn {

ad::Var ParamStore::add(const std::string& name, Matrix init) {
  if (index_.count(name) != 0) throw ConfigError("duplicate parameter name: " + name);
  index_[name] = entries_.size();
  entries_.emplace_back(name, ad::parameter(std::move(init)));
  return entries_.back().second;
}

const ad::Var& ParamStore::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ConfigError("unknown parameter: " + name);
  return entries_[it->second].second;
}

size_t ParamStore::scalar_count() const {
  size_t n = 0;
  for (const auto& [_, v] : entries_) n += static_cast<size_t>(v.value().size());
  return n;
}

void ParamStore::zero_grad() {
  for (auto& [_, v] : entries_) {
    ad::Var copy = v;
    copy.zero_grad();
  }
}

double ParamStore::grad_norm() const {
  double sq = 0.0;
  for (const auto& [_, v] : entries_) {
    if (v.node()->grad.size() != 0) sq += v.node()->grad.squaredNorm();
  }
  return std::sqrt(sq);
}

Initializer Initializer::scope(const std::string& name) const {
  return Initializer(*store_, *rng_, full(name));
}

ad::Var Initializer::xavier(const std::string& name, Eigen::Index rows, Eigen::Index cols, double fan_in,
                            double fan_out) {
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(*rng_);
  return store_->add(full(name), std::move(m));
}

ad::Var Initializer::normal(const std::string& name, Eigen::Index rows, Eigen::Index cols, double stddev) {
  std::normal_distribution<double> dist(0.0, stddev);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(*rng_);
  return store_->add(full(name), std::move(m));
}

ad::Var Initializer::zeros(const std::string& name, Eigen::Index rows, Eigen::Index cols) {
  return store_->add(full(name), Matrix::Zero(rows, cols));
}

ad::Var Initializer::ones(const std::string& name, Eigen::Index rows, Eigen::Index cols) {
  return store_->add(full(name), Matrix::Ones(rows, cols));
}

}  // namespace mcdub::nn
