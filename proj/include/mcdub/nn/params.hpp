#pragma once

#include "mcdub/ad/autodiff.hpp"

#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace mcdub::nn {

// Ordered registry of named trainable tensors. Names are dotted paths
// ("cda.text.block0.attn.wq") and unique; insertion order is the
// serialization order.
class ParamStore {
 public:
  ad::Var add(const std::string& name, Matrix init);

  const ad::Var& get(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  const std::vector<std::pair<std::string, ad::Var>>& entries() const { return entries_; }
  size_t size() const { return entries_.size(); }
  size_t scalar_count() const;

  void zero_grad();
  double grad_norm() const;

 private:
  std::vector<std::pair<std::string, ad::Var>> entries_;
  std::map<std::string, size_t> index_;
};

// Scoped parameter factory. Each layer receives an Initializer already scoped
// to its own name and draws its initial values from the shared generator.
class Initializer {
 public:
  Initializer(ParamStore& store, std::mt19937_64& rng, std::string prefix = {})
      : store_(&store), rng_(&rng), prefix_(std::move(prefix)) {}

  Initializer scope(const std::string& name) const;

  // Glorot-uniform.
  ad::Var xavier(const std::string& name, Eigen::Index rows, Eigen::Index cols, double fan_in, double fan_out);
  ad::Var normal(const std::string& name, Eigen::Index rows, Eigen::Index cols, double stddev);
  ad::Var zeros(const std::string& name, Eigen::Index rows, Eigen::Index cols);
  ad::Var ones(const std::string& name, Eigen::Index rows, Eigen::Index cols);

 private:
  std::string full(const std::string& name) const { return prefix_.empty() ? name : prefix_ + "." + name; }

  ParamStore* store_;
  std::mt19937_64* rng_;
  std::string prefix_;
};

}  // namespace mcdub::nn
