#include "mcdub/errors.hpp"
#include "mcdub/prosody.hpp"
#include "oracles.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace mcdub;
using mcdub::test::Rng;
using mcdub::test::random_matrix;

namespace {

Matrix conv_oracle(const Matrix& x, const Matrix& w, const Matrix& b, int kernel) {
  const long in = x.cols();
  const long pad = (kernel - 1) / 2;
  Matrix y(x.rows(), w.cols());
  for (long t = 0; t < x.rows(); ++t) {
    for (long o = 0; o < w.cols(); ++o) {
      double acc = b(0, o);
      for (long j = 0; j < kernel; ++j) {
        const long src = t - pad + j;
        if (src < 0 || src >= x.rows()) continue;
        for (long c = 0; c < in; ++c) acc += x(src, c) * w(j * in + c, o);
      }
      y(t, o) = acc;
    }
  }
  return y;
}

Matrix relu_ln_oracle(const Matrix& x, const Matrix& gamma, const Matrix& beta) {
  Matrix y(x.rows(), x.cols());
  for (long t = 0; t < x.rows(); ++t) {
    double mean = 0.0, var = 0.0;
    for (long c = 0; c < x.cols(); ++c) mean += std::max(x(t, c), 0.0);
    mean /= static_cast<double>(x.cols());
    for (long c = 0; c < x.cols(); ++c) var += std::pow(std::max(x(t, c), 0.0) - mean, 2);
    var /= static_cast<double>(x.cols());
    for (long c = 0; c < x.cols(); ++c) {
      y(t, c) = (std::max(x(t, c), 0.0) - mean) / std::sqrt(var + 1e-5) * gamma(0, c) + beta(0, c);
    }
  }
  return y;
}

}  // namespace

TEST_CASE("additive attention matches the scalar oracle") {
  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const int dim = test::randint(rng, 1, 8);
    nn::ParamStore store;
    const prosody::AdditiveAttention att(nn::Initializer(store, rng), dim);
    test::randomize(store, rng, 1.0);
    const Matrix q = random_matrix(rng, test::randint(rng, 1, 6), dim);
    const Matrix keys = random_matrix(rng, test::randint(rng, 1, 6), dim);
    Matrix alpha;
    const Matrix want = test::additive_oracle(q, keys, att.w_a().value(), att.W_a().value(), att.U_a().value(),
                                              att.b_a().value(), &alpha);
    const auto got = prosody::fuse_affect(ad::constant(q), ad::constant(keys), att);
    CHECK((got.h.value() - want).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((got.alpha.value() - alpha).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((got.alpha.value().rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("additive attention with one key") {
  Rng rng(2);
  nn::ParamStore store;
  const prosody::AdditiveAttention att(nn::Initializer(store, rng), 5);
  const Matrix key = random_matrix(rng, 1, 5);
  const auto got = prosody::fuse_affect(ad::constant(random_matrix(rng, 4, 5)), ad::constant(key), att);
  for (Eigen::Index i = 0; i < 4; ++i) CHECK(got.h.value().row(i) == key.row(0));
  CHECK_THROWS_AS(prosody::fuse_affect(ad::constant(random_matrix(rng, 4, 5)), ad::constant(random_matrix(rng, 3, 4)), att),
                  DimMismatch);
}

TEST_CASE("variance predictor matches the scalar oracle") {
  Rng rng(3);
  nn::ParamStore store;
  const prosody::VariancePredictor pred(nn::Initializer(store, rng).scope("p"), 4, 4, 3, 0.5);
  test::randomize(store, rng, 1.0);
  const Matrix x = random_matrix(rng, 3, 4);
  auto v = [&](const std::string& name) { return store.get("p." + name).value(); };
  Matrix h = relu_ln_oracle(conv_oracle(x, v("conv1.weight"), v("conv1.bias"), 3), v("ln1.gamma"), v("ln1.beta"));
  h = relu_ln_oracle(conv_oracle(h, v("conv2.weight"), v("conv2.bias"), 3), v("ln2.gamma"), v("ln2.beta"));
  Matrix want(3, 1);
  for (long t = 0; t < 3; ++t) {
    double acc = v("head.bias")(0, 0);
    for (long c = 0; c < 4; ++c) acc += h(t, c) * v("head.weight")(c, 0);
    want(t, 0) = acc;
  }
  const Matrix got = pred(ad::constant(x), {}).value();
  CHECK((got - want).cwiseAbs().maxCoeff() < 1e-12);
  // Dropout is inactive without an rng; repeated evaluation is identical.
  CHECK(pred(ad::constant(x), {}).value() == got);
}

TEST_CASE("predictions are repeated to mel rate") {
  Rng rng(4);
  nn::ParamStore store;
  const prosody::VariancePredictor pred(nn::Initializer(store, rng), 6, 6, 3, 0.0);
  const Matrix h = random_matrix(rng, 10, 6);
  const ad::Var e = prosody::predict_energy(ad::constant(h), pred, 4);
  const ad::Var p = prosody::predict_pitch(ad::constant(h), pred, 4);
  CHECK(e.rows() == 40);
  CHECK(p.rows() == 40);
  const Matrix base = pred(ad::constant(h), {}).value();
  for (Eigen::Index t = 0; t < 40; ++t) CHECK(e.value()(t, 0) == base(t / 4, 0));
  CHECK(prosody::to_track(e).size() == 40);

  ad::Var w = pred.head().weight();
  w.mutable_value().setZero();
  CHECK((prosody::predict_energy(ad::constant(h), pred, 4).value().array() == 0.0).all());
}

TEST_CASE("predictor gradients") {
  Rng rng(5);
  nn::ParamStore store;
  const prosody::VariancePredictor pred(nn::Initializer(store, rng), 5, 6, 3, 0.0);
  test::randomize(store, rng);
  const Matrix h = random_matrix(rng, 7, 5);
  const Matrix target = random_matrix(rng, 14, 1);
  const auto audit = test::audit_gradients(store, [&]() {
    return ad::masked_mse(prosody::predict_energy(ad::constant(h), pred, 2), target, Matrix());
  });
  INFO("worst " << audit.worst_name);
  CHECK(audit.worst < 1e-3);
}

TEST_CASE("run_cpp shapes and concatenation") {
  Rng rng(6);
  ModelConfig cfg = test::micro_config({}, 4).resolved();
  nn::ParamStore store;
  const prosody::ContextProsodyPredictor cpp(nn::Initializer(store, rng), cfg);
  const Matrix face = random_matrix(rng, 9, cfg.d_face);
  const Matrix t_lip = random_matrix(rng, 36, cfg.dim);
  const auto out = prosody::run_cpp(face, ad::constant(t_lip), cpp, 4);
  CHECK(out.context.rows() == 36);
  CHECK(out.context.cols() == 2 * cfg.dim);
  CHECK(out.energy.rows() == 36);
  CHECK(out.pitch.rows() == 36);
  const Matrix& cat = out.features.concat.value();
  CHECK(cat.leftCols(cfg.dim) == out.features.h_t_aro.value());
  CHECK(cat.rightCols(cfg.dim) == out.features.h_t_val.value());
  for (Eigen::Index t = 0; t < 36; ++t) CHECK(out.context.value().row(t) == cat.row(t / 4));
  CHECK(out.alpha_aro.rows() == 9);
  CHECK(out.alpha_aro.cols() == 36);
  CHECK((out.alpha_val.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
  CHECK_THROWS_AS(prosody::run_cpp(random_matrix(rng, 8, cfg.d_face), ad::constant(t_lip), cpp, 4), DimMismatch);
  CHECK_THROWS_AS(prosody::run_cpp(random_matrix(rng, 9, cfg.d_face + 1), ad::constant(t_lip), cpp, 4), DimMismatch);
}
