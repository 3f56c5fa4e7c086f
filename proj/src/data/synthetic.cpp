#include "mcdub/data/synthetic.hpp"

#include "mcdub/errors.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

namespace mcdub::data {

namespace {

constexpr std::uint64_t kCorpusStream = 0xC0A5;
constexpr std::uint64_t kSampleStream = 0x5A3B;

std::mt19937_64 seeded(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32),
                    static_cast<std::uint32_t>(c)};
  return std::mt19937_64(seq);
}

Matrix gaussian(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, double stddev) {
  std::normal_distribution<double> dist(0.0, stddev);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

}  // namespace

void validate_shape(const ShapeConfig& s) {
  if (s.vocab <= 0 || s.d_lip <= 0 || s.d_face <= 0 || s.n_mels <= 0 || s.latent_dim <= 0) {
    throw InvalidShapeConfig("vocab, d_lip, d_face, n_mels and latent_dim must be positive");
  }
  if (s.min_phonemes <= 0 || s.max_phonemes < s.min_phonemes) {
    throw InvalidShapeConfig("phoneme length range must satisfy 0 < min <= max");
  }
  if (s.min_frames_per_phoneme <= 0 || s.max_frames_per_phoneme < s.min_frames_per_phoneme) {
    throw InvalidShapeConfig("frames-per-phoneme range must satisfy 0 < min <= max");
  }
  if (s.absent_context_prob < 0.0 || s.absent_context_prob > 1.0) {
    throw InvalidShapeConfig("absent_context_prob must lie in [0, 1]");
  }
}

double PitchMap::encode(double f0_hz) const {
  const double lo = std::log(f0_min);
  const double hi = std::log(f0_max);
  return 0.5 + (std::log(f0_hz) - lo) / (hi - lo);
}

double PitchMap::decode(double code) const {
  if (!(code > threshold)) return 0.0;
  const double lo = std::log(f0_min);
  const double hi = std::log(f0_max);
  return std::exp(lo + (code - 0.5) * (hi - lo));
}

CorpusStats compute_stats(const std::vector<ContextSample>& samples) {
  if (samples.empty()) throw InvalidShapeConfig("cannot compute statistics of an empty corpus");
  const Eigen::Index n_mels = samples.front().current.mel.cols();
  RowVector sum = RowVector::Zero(n_mels);
  RowVector sq = RowVector::Zero(n_mels);
  double frames = 0.0, e_sum = 0.0, e_sq = 0.0, f_sum = 0.0, f_sq = 0.0, voiced = 0.0;
  auto visit = [&](const SentenceBundle& b) {
    sum += b.mel.colwise().sum();
    sq += b.mel.array().square().matrix().colwise().sum();
    frames += static_cast<double>(b.mel.rows());
    for (size_t t = 0; t < b.energy.size(); ++t) {
      e_sum += b.energy[t];
      e_sq += b.energy[t] * b.energy[t];
      if (b.voiced[t] != 0) {
        const double lf = std::log(b.pitch[t]);
        f_sum += lf;
        f_sq += lf * lf;
        voiced += 1.0;
      }
    }
  };
  for (const auto& s : samples) {
    if (s.previous) visit(*s.previous);
    visit(s.current);
    if (s.following) visit(*s.following);
  }
  constexpr double kStdFloor = 1e-3;
  CorpusStats st;
  st.mel_mean = sum / frames;
  st.mel_std = ((sq / frames).array() - st.mel_mean.array().square()).max(0.0).sqrt().max(kStdFloor).matrix();
  st.energy_mean = e_sum / frames;
  st.energy_std = std::max(std::sqrt(std::max(e_sq / frames - st.energy_mean * st.energy_mean, 0.0)), kStdFloor);
  if (voiced > 0.0) {
    st.logf0_mean = f_sum / voiced;
    st.logf0_std = std::max(std::sqrt(std::max(f_sq / voiced - st.logf0_mean * st.logf0_mean, 0.0)), kStdFloor);
  }
  return st;
}

SyntheticGenerator::SyntheticGenerator(std::uint64_t seed, const FrameRateConfig& frame_cfg,
                                       const ShapeConfig& shape)
    : seed_(seed), frame_cfg_(frame_cfg), shape_(shape) {
  validate_shape(shape);
  if (frame_cfg.n < 1) throw InvalidShapeConfig("frame ratio n must be positive");
  auto rng = seeded(seed, kCorpusStream, 0);
  const int l = shape.latent_dim;
  phoneme_latent_ = gaussian(rng, shape.vocab, l, 1.0);
  lip_proj_ = gaussian(rng, l, shape.d_lip, 1.5 / std::sqrt(static_cast<double>(l)));
  face_proj_ = gaussian(rng, 2 + l, shape.d_face, 1.0 / std::sqrt(2.0 + l));
  mel_proj_ = gaussian(rng, l, shape.n_mels, 1.0 / std::sqrt(static_cast<double>(l)));
  mel_subframe_ = gaussian(rng, frame_cfg.n, shape.n_mels, 0.3);
  std::normal_distribution<double> offset(0.0, 0.08);
  pitch_offset_.resize(static_cast<size_t>(shape.vocab));
  for (auto& o : pitch_offset_) o = offset(rng);
}

SentenceBundle SyntheticGenerator::sentence(std::mt19937_64& rng, Eigen::Index frame_offset, double logf0_base,
                                            const std::array<double, 6>& affect) const {
  const int n = frame_cfg_.n;
  std::uniform_int_distribution<int> length(shape_.min_phonemes, shape_.max_phonemes);
  std::uniform_int_distribution<int> phone(0, shape_.vocab - 1);
  std::uniform_int_distribution<int> dur(shape_.min_frames_per_phoneme, shape_.max_frames_per_phoneme);
  std::normal_distribution<double> noise(0.0, 0.02);

  SentenceBundle b;
  const int t_pho = length(rng);
  std::vector<int> frame_phone;
  for (int i = 0; i < t_pho; ++i) {
    const int id = phone(rng);
    b.phonemes.push_back(id);
    const int frames = dur(rng);
    for (int f = 0; f < frames; ++f) frame_phone.push_back(id);
  }
  const auto t_v = static_cast<Eigen::Index>(frame_phone.size());
  b.lip_feats.resize(t_v, shape_.d_lip);
  b.face_feats.resize(t_v, shape_.d_face);
  b.mel.resize(t_v * n, shape_.n_mels);
  b.voiced.resize(static_cast<size_t>(t_v * n));
  b.pitch.resize(static_cast<size_t>(t_v * n));
  b.energy.resize(static_cast<size_t>(t_v * n));

  const int l = shape_.latent_dim;
  for (Eigen::Index t = 0; t < t_v; ++t) {
    const int id = frame_phone[static_cast<size_t>(t)];
    const RowVector z = phoneme_latent_.row(id);
    const double g = static_cast<double>(frame_offset + t);
    const double aro = affect[0] * std::sin(2.0 * std::numbers::pi * g / affect[1] + affect[2]);
    const double val = affect[3] * std::sin(2.0 * std::numbers::pi * g / affect[4] + affect[5]);

    b.lip_feats.row(t) = (z * lip_proj_).array().tanh().matrix();
    RowVector face_in(2 + l);
    face_in << aro, val, 0.3 * z;
    b.face_feats.row(t) = (face_in * face_proj_).array().tanh().matrix();
    for (Eigen::Index c = 0; c < b.lip_feats.cols(); ++c) b.lip_feats(t, c) += noise(rng);
    for (Eigen::Index c = 0; c < b.face_feats.cols(); ++c) b.face_feats(t, c) += noise(rng);

    const RowVector base = z * mel_proj_;
    const bool voiced = id % 5 != 0;
    for (int j = 0; j < n; ++j) {
      const Eigen::Index m = t * n + j;
      RowVector row = (-2.0 + 1.5 * (1.0 + 0.4 * aro) * (base + mel_subframe_.row(j)).array().tanh()).matrix();
      for (Eigen::Index c = 0; c < row.size(); ++c) row(c) += noise(rng);
      double pitch = 0.0;
      if (voiced) {
        const double logf0 = logf0_base + 0.25 * val + pitch_offset_[static_cast<size_t>(id)] +
                             0.03 * static_cast<double>(j) / static_cast<double>(n);
        const double f0 = std::clamp(std::exp(logf0), pitch_map_.f0_min, pitch_map_.f0_max);
        const double code = pitch_map_.encode(f0);
        row(pitch_map_.bin) = code;
        // Stored pitch is the decoded code so that mel -> pitch is exact.
        pitch = pitch_map_.decode(code);
      } else {
        row(pitch_map_.bin) = pitch_map_.unvoiced_code;
      }
      b.mel.row(m) = row;
      b.voiced[static_cast<size_t>(m)] = voiced ? 1 : 0;
      b.pitch[static_cast<size_t>(m)] = pitch;
      b.energy[static_cast<size_t>(m)] = row.norm();
    }
  }
  return b;
}

ContextSample SyntheticGenerator::sample(std::uint64_t index) const {
  auto rng = seeded(seed_, kSampleStream, index);
  std::uniform_real_distribution<double> amp(0.4, 1.0);
  std::uniform_real_distribution<double> period(30.0, 120.0);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::normal_distribution<double> speaker(0.0, 0.1);
  std::bernoulli_distribution absent(shape_.absent_context_prob);

  const std::array<double, 6> affect{amp(rng), period(rng), phase(rng), amp(rng), period(rng), phase(rng)};
  const double logf0_base = std::log(140.0) + speaker(rng);
  const bool drop_prev = absent(rng);
  const bool drop_fol = absent(rng);

  ContextSample s;
  s.id = "s" + std::to_string(index);
  s.frame_cfg = frame_cfg_;
  SentenceBundle prev = sentence(rng, 0, logf0_base, affect);
  const Eigen::Index cur_offset = prev.video_frames();
  s.current = sentence(rng, cur_offset, logf0_base, affect);
  SentenceBundle fol = sentence(rng, cur_offset + s.current.video_frames(), logf0_base, affect);
  if (shape_.with_context) {
    if (!drop_prev) s.previous = std::move(prev);
    if (!drop_fol) s.following = std::move(fol);
  }
  return s;
}

Corpus generate_synthetic_corpus(std::uint64_t seed, int count, const FrameRateConfig& frame_cfg,
                                 const ShapeConfig& shape, std::uint64_t first_index) {
  if (count < 1) throw InvalidShapeConfig("corpus needs at least one sample");
  SyntheticGenerator gen(seed, frame_cfg, shape);
  Corpus corpus;
  corpus.samples.reserve(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i) corpus.samples.push_back(gen.sample(first_index + static_cast<std::uint64_t>(i)));
  corpus.info.seed = seed;
  corpus.info.frame_cfg = frame_cfg;
  corpus.info.shape = shape;
  corpus.info.pitch_map = gen.pitch_map();
  corpus.info.stats = compute_stats(corpus.samples);
  return corpus;
}

void validate_corpus(const Corpus& corpus) {
  const ShapeConfig& shape = corpus.info.shape;
  auto check = [&](const SentenceBundle& b, const std::string& where) {
    for (int id : b.phonemes) {
      if (id < 0 || id >= shape.vocab) throw UnknownPhonemeId(where + ": phoneme id " + std::to_string(id));
    }
    if (b.lip_feats.cols() != shape.d_lip || b.face_feats.cols() != shape.d_face || b.mel.cols() != shape.n_mels) {
      throw DimMismatch(where + ": feature width differs from corpus shape");
    }
    for (Eigen::Index t = 0; t < b.mel.rows(); ++t) {
      if (corpus.info.pitch_map.decode(b.mel(t, corpus.info.pitch_map.bin)) != b.pitch[static_cast<size_t>(t)]) {
        throw FormatError(where + ": pitch not decodable from mel at frame " + std::to_string(t));
      }
    }
  };
  for (const auto& s : corpus.samples) {
    if (!(s.frame_cfg == corpus.info.frame_cfg)) throw FormatError(s.id + ": frame config differs from corpus");
    validate_sample(s);
    if (s.previous) check(*s.previous, s.id + "/previous");
    check(s.current, s.id + "/current");
    if (s.following) check(*s.following, s.id + "/following");
  }
}

}  // namespace mcdub::data
