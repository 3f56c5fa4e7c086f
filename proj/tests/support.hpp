#pragma once

// Shared generators and reference implementations for the test binaries.

#include "mcdub/data/types.hpp"
#include "mcdub/model.hpp"
#include "mcdub/model_config.hpp"
#include "mcdub/nn/params.hpp"

#include <cmath>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace mcdub::test {

using Rng = std::mt19937_64;

inline int randint(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

inline Matrix random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = uniform(rng, -scale, scale);
  return m;
}

struct Dims {
  int vocab = 12;
  int d_lip = 5;
  int d_face = 3;
  int n_mels = 6;
};

inline data::FrameRateConfig frame_for(int n) {
  // sr = n * hs * fps with hs = 160, fps = 25
  return {n * 4000, 160, 25, n};
}

inline data::SentenceBundle random_bundle(Rng& rng, int phonemes, int n, const Dims& d) {
  data::SentenceBundle b;
  int t_v = 0;
  for (int p = 0; p < phonemes; ++p) {
    b.phonemes.push_back(randint(rng, 0, d.vocab - 1));
    t_v += randint(rng, 1, 3);
  }
  b.lip_feats = random_matrix(rng, t_v, d.d_lip);
  b.face_feats = random_matrix(rng, t_v, d.d_face);
  b.mel = random_matrix(rng, static_cast<Eigen::Index>(t_v) * n, d.n_mels, 3.0);
  for (int t = 0; t < t_v * n; ++t) {
    const bool voiced = randint(rng, 0, 3) != 0;
    b.voiced.push_back(voiced ? 1 : 0);
    b.pitch.push_back(voiced ? uniform(rng, 80.0, 300.0) : 0.0);
    b.energy.push_back(uniform(rng, 0.1, 5.0));
  }
  return b;
}

// Phoneme counts < 1 mean "absent" for the context sentences.
inline data::ContextSample random_sample(Rng& rng, int t_pre, int t_cur, int t_fol, int n, const Dims& d = {}) {
  data::ContextSample s;
  s.id = "r" + std::to_string(rng() % 100000);
  s.frame_cfg = frame_for(n);
  if (t_pre > 0) s.previous = random_bundle(rng, t_pre, n, d);
  s.current = random_bundle(rng, t_cur, n, d);
  if (t_fol > 0) s.following = random_bundle(rng, t_fol, n, d);
  return s;
}

// Brute-force selection: explicit index lists, element-by-element copies.
struct OracleSelection {
  std::vector<int> phonemes;
  std::vector<std::vector<double>> lip_rows;
  std::vector<std::vector<double>> face_rows;
  std::vector<std::vector<double>> mel_rows;
  std::vector<std::uint8_t> voiced;
  std::vector<double> pitch;
  std::vector<double> energy;
  long pho_counts[3] = {0, 0, 0};
  long vid_counts[3] = {0, 0, 0};
};

inline OracleSelection oracle_select(const data::ContextSample& s, int k, bool use_prev, bool use_fol) {
  OracleSelection o;
  auto copy_rows = [](const Matrix& m, long first, long count, std::vector<std::vector<double>>& out) {
    for (long r = first; r < first + count; ++r) {
      std::vector<double> row;
      for (long c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
      out.push_back(row);
    }
  };
  auto append = [&](const data::SentenceBundle& b, long pho_first, long pho_count, long vid_first, long vid_count,
                    int seg) {
    for (long i = pho_first; i < pho_first + pho_count; ++i) o.phonemes.push_back(b.phonemes[static_cast<size_t>(i)]);
    copy_rows(b.lip_feats, vid_first, vid_count, o.lip_rows);
    copy_rows(b.face_feats, vid_first, vid_count, o.face_rows);
    const long n = s.frame_cfg.n;
    copy_rows(b.mel, vid_first * n, vid_count * n, o.mel_rows);
    for (long t = vid_first * n; t < (vid_first + vid_count) * n; ++t) {
      o.voiced.push_back(b.voiced[static_cast<size_t>(t)]);
      o.pitch.push_back(b.pitch[static_cast<size_t>(t)]);
      o.energy.push_back(b.energy[static_cast<size_t>(t)]);
    }
    o.pho_counts[seg] = pho_count;
    o.vid_counts[seg] = vid_count;
  };
  auto frames_for = [](long keep, long total, long t_v) {
    if (keep >= total) return t_v;
    return static_cast<long>(std::round(static_cast<double>(keep) * static_cast<double>(t_v) / static_cast<double>(total)));
  };
  if (use_prev && s.previous) {
    const auto& b = *s.previous;
    const long total = static_cast<long>(b.phonemes.size());
    const long keep = total < k ? total : k;
    const long frames = frames_for(keep, total, b.lip_feats.rows());
    append(b, total - keep, keep, b.lip_feats.rows() - frames, frames, 0);
  }
  append(s.current, 0, static_cast<long>(s.current.phonemes.size()), 0, s.current.lip_feats.rows(), 1);
  if (use_fol && s.following) {
    const auto& b = *s.following;
    const long total = static_cast<long>(b.phonemes.size());
    const long keep = total < k ? total : k;
    append(b, 0, keep, 0, frames_for(keep, total, b.lip_feats.rows()), 2);
  }
  return o;
}

// Empty when the selection agrees with the oracle element for element,
// otherwise a description of the first difference.
inline std::string selection_mismatch(const data::SelectedContext& sel, const OracleSelection& o, int n) {
  if (sel.phoneme_seq != o.phonemes) return "phoneme sequence";
  if (static_cast<size_t>(sel.lip_seq.rows()) != o.lip_rows.size()) return "video length";
  if (static_cast<size_t>(sel.face_seq.rows()) != o.face_rows.size()) return "face length";
  if (static_cast<size_t>(sel.mel_gt.rows()) != o.mel_rows.size()) return "mel length";
  for (size_t r = 0; r < o.lip_rows.size(); ++r) {
    for (size_t c = 0; c < o.lip_rows[r].size(); ++c) {
      if (sel.lip_seq(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) != o.lip_rows[r][c]) return "lip rows";
    }
    for (size_t c = 0; c < o.face_rows[r].size(); ++c) {
      if (sel.face_seq(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) != o.face_rows[r][c]) return "face rows";
    }
  }
  for (size_t r = 0; r < o.mel_rows.size(); ++r) {
    for (size_t c = 0; c < o.mel_rows[r].size(); ++c) {
      if (sel.mel_gt(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) != o.mel_rows[r][c]) return "mel rows";
    }
  }
  if (sel.voiced != o.voiced) return "voicing";
  if (sel.pitch != o.pitch) return "pitch";
  if (sel.energy != o.energy) return "energy";
  for (int seg = 0; seg < 3; ++seg) {
    if (sel.bounds.phoneme[seg].size() != o.pho_counts[seg]) return "phoneme bounds";
    if (sel.bounds.video[seg].size() != o.vid_counts[seg]) return "video bounds";
    if (sel.bounds.mel[seg].size() != o.vid_counts[seg] * n) return "mel bounds";
  }
  return {};
}

// Architecture small enough for finite differences: every dimension <= 16
// and one FFT block per stack.
inline ModelConfig micro_config(const Dims& d = {}, int n = 2) {
  ModelConfig c;
  c.vocab = d.vocab;
  c.d_lip = d.d_lip;
  c.d_face = d.d_face;
  c.n_mels = d.n_mels;
  c.frame_ratio = n;
  c.dim = 8;
  c.heads = 2;
  c.ffn_dim = 16;
  c.ffn_kernel_first = 3;
  c.ffn_kernel_second = 1;
  c.text_blocks = 1;
  c.lip_blocks = 1;
  c.decoder_blocks = 1;
  c.aligner_heads = 2;
  c.predictor_channels = 8;
  c.dab_descriptors = 4;
  c.postnet_channels = 8;
  c.postnet_layers = 3;
  return c;
}

// Flat statistics for hand-built samples.
inline data::CorpusStats unit_stats(int n_mels) {
  data::CorpusStats s;
  s.mel_mean = RowVector::Zero(n_mels);
  s.mel_std = RowVector::Ones(n_mels);
  s.energy_mean = 0.0;
  s.energy_std = 1.0;
  s.logf0_mean = std::log(150.0);
  s.logf0_std = 0.5;
  return s;
}

// Central differences of a scalar function of one matrix, in place.
inline Matrix numeric_gradient(Matrix& x, const std::function<double()>& f, double h = 1e-6) {
  Matrix g(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double keep = x.data()[i];
    x.data()[i] = keep + h;
    const double up = f();
    x.data()[i] = keep - h;
    const double down = f();
    x.data()[i] = keep;
    g.data()[i] = (up - down) / (2.0 * h);
  }
  return g;
}

// The denominator is floored at 1e-6 so tensors whose true gradient is zero
// (an attention key bias, which softmax ignores) compare in absolute terms.
inline double relative_error(const Matrix& a, const Matrix& b) {
  const double scale = std::max({a.norm(), b.norm(), 1e-6});
  return (a - b).norm() / scale;
}

// Replaces every parameter with uniform noise so no gradient path is
// trivially zero (zero-initialised layers would otherwise hide upstream
// parameters).
inline void randomize(nn::ParamStore& store, Rng& rng, double scale = 0.5) {
  for (const auto& [_, v] : store.entries()) {
    ad::Var h = v;
    h.mutable_value() = random_matrix(rng, v.rows(), v.cols(), scale);
  }
}

struct GradAudit {
  size_t tensors = 0;
  size_t scalars = 0;
  double worst = 0.0;
  std::string worst_name;
};

// Per-tensor relative error between reverse-mode and central-difference
// gradients of a scalar loss.
inline GradAudit audit_gradients(nn::ParamStore& store, const std::function<ad::Var()>& loss, double h = 1e-5) {
  store.zero_grad();
  ad::backward(loss());
  std::vector<Matrix> analytic;
  for (const auto& [_, v] : store.entries()) analytic.push_back(v.grad());
  store.zero_grad();
  GradAudit audit;
  size_t i = 0;
  for (const auto& [name, v] : store.entries()) {
    ad::Var handle = v;
    const Matrix fd = numeric_gradient(handle.mutable_value(), [&]() { return loss().scalar(); }, h);
    const double err = relative_error(analytic[i], fd);
    if (err > audit.worst) {
      audit.worst = err;
      audit.worst_name = name;
    }
    ++audit.tensors;
    audit.scalars += static_cast<size_t>(fd.size());
    ++i;
  }
  return audit;
}

}  // namespace mcdub::test
