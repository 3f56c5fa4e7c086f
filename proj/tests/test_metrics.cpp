#include "mcdub/errors.hpp"
#include "mcdub/eval/evaluation.hpp"
#include "mcdub/eval/metrics.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace mcdub;
using namespace mcdub::eval;
using mcdub::test::Rng;

namespace {

ProsodyTrack track(std::vector<double> hz) {
  ProsodyTrack t;
  for (double v : hz) t.voiced.push_back(v > 0.0 ? 1 : 0);
  t.values = std::move(hz);
  return t;
}

}  // namespace

TEST_CASE("gpe hand counts") {
  const ProsodyTrack ref = track(std::vector<double>(10, 100.0));
  CHECK(gpe(ref, ref) == 0.0);
  auto hyp = ref;
  hyp.values[3] = 130.0;
  hyp.values[7] = 70.0;
  CHECK(gpe(ref, hyp) == 20.0);

  auto edge = ref;
  edge.values[0] = 120.0;
  edge.values[1] = 80.0;
  CHECK(gpe(ref, edge) == 0.0);
  edge.values[2] = 120.5;
  CHECK(gpe(ref, edge) == 10.0);

  // Relative error is taken against the reference.
  const auto a = track({100.0});
  const auto b = track({125.0});
  CHECK(gpe(a, b) == 100.0);
  CHECK(gpe(b, a) == 0.0);

  CHECK_THROWS_AS(gpe(track({0.0, 100.0}), track({100.0, 0.0})), NoVoicedOverlap);
  CHECK_THROWS_AS(gpe(track({100.0}), track({100.0, 100.0})), LengthMismatch);
}

TEST_CASE("ffe hand counts") {
  const ProsodyTrack ref = track({100, 100, 100, 100, 100, 0, 0, 100, 100, 100});
  CHECK(ffe(ref, ref) == 0.0);
  auto hyp = ref;
  hyp.values[0] = 0.0;  // voicing error
  hyp.voiced[0] = 0;
  hyp.values[1] = 150.0;
  hyp.values[9] = 50.0;
  CHECK(ffe(ref, hyp) == 30.0);
  const auto cmp = compare_pitch(ref, hyp);
  CHECK(cmp.voicing_errors == 1);
  CHECK(cmp.pitch_errors == 2);
  CHECK(cmp.both_voiced == 7);
  CHECK(cmp.frames[0] == FrameClass::kVoicingError);
  CHECK(cmp.frames[1] == FrameClass::kPitchError);
  CHECK(cmp.frames[2] == FrameClass::kBothVoiced);
  CHECK(cmp.frames[5] == FrameClass::kBothUnvoiced);

  ProsodyTrack flipped = ref;
  for (size_t i = 0; i < 10; ++i) {
    flipped.voiced[i] = ref.voiced[i] ? 0 : 1;
    flipped.values[i] = ref.voiced[i] ? 0.0 : 100.0;
  }
  CHECK(ffe(ref, flipped) == 100.0);
  CHECK_THROWS_AS(ffe(ProsodyTrack{}, ProsodyTrack{}), EmptyTrack);

  ProsodyTrack broken = ref;
  broken.voiced.pop_back();
  CHECK_THROWS_AS(ffe(broken, ref), LengthMismatch);
}

TEST_CASE("metric bounds under fuzzing") {
  Rng rng(1);
  for (int trial = 0; trial < 2000; ++trial) {
    const int t = test::randint(rng, 1, 40);
    std::vector<double> a, b;
    for (int i = 0; i < t; ++i) {
      a.push_back(test::randint(rng, 0, 3) == 0 ? 0.0 : test::uniform(rng, 50.0, 400.0));
      b.push_back(test::randint(rng, 0, 3) == 0 ? 0.0 : test::uniform(rng, 50.0, 400.0));
    }
    const auto ra = track(a), rb = track(b);
    const auto cmp = compare_pitch(ra, rb);
    const double f = ffe(cmp);
    CHECK(f >= 0.0);
    CHECK(f <= 100.0);
    size_t counted = 0;
    for (auto c : cmp.frames) counted += c == FrameClass::kBothVoiced || c == FrameClass::kPitchError;
    CHECK(counted == cmp.both_voiced);
    if (cmp.both_voiced > 0) {
      const double g = gpe(cmp);
      CHECK(g >= 0.0);
      CHECK(g <= 100.0);
      CHECK(f >= g * static_cast<double>(cmp.both_voiced) / static_cast<double>(t) - 1e-9);
    } else {
      CHECK_THROWS_AS(gpe(cmp), NoVoicedOverlap);
    }
  }
}

TEST_CASE("pitch decoding from mel") {
  data::ShapeConfig shape;
  shape.min_phonemes = 3;
  shape.max_phonemes = 8;
  const auto corpus = data::generate_synthetic_corpus(3, 6, {}, shape);
  const auto& map = corpus.info.pitch_map;
  for (const auto& s : corpus.samples) {
    const auto got = pitch_from_mel(s.current.mel, map);
    const auto want = reference_track(s);
    REQUIRE(got.size() == want.size());
    CHECK(got.voiced == want.voiced);
    for (size_t i = 0; i < got.size(); ++i) CHECK(got.values[i] == doctest::Approx(want.values[i]).epsilon(1e-9));
    CHECK(ffe(want, got) == 0.0);
  }
  const auto silent = pitch_from_mel(Matrix::Zero(12, shape.n_mels), map);
  for (auto v : silent.voiced) CHECK(v == 0);

  Rng rng(2);
  Matrix noisy = corpus.samples[0].current.mel + test::random_matrix(rng, corpus.samples[0].current.mel.rows(), shape.n_mels, 0.05);
  const auto d1 = pitch_from_mel(noisy, map), d2 = pitch_from_mel(noisy, map);
  CHECK(d1.values == d2.values);
  CHECK(d1.voiced == d2.voiced);

  CHECK_THROWS_AS(pitch_from_mel(noisy, std::nullopt), MissingPitchMap);
  data::PitchMap bad = map;
  bad.bin = shape.n_mels;
  CHECK_THROWS_AS(pitch_from_mel(noisy, bad), DimMismatch);
}

TEST_CASE("corpus evaluation report") {
  data::ShapeConfig shape;
  shape.min_phonemes = 3;
  shape.max_phonemes = 8;
  const auto corpus = data::generate_synthetic_corpus(4, 5, {}, shape);
  std::vector<Matrix> mels;
  for (const auto& s : corpus.samples) mels.push_back(s.current.mel);
  const auto exact = evaluate_mels(corpus, mels);
  REQUIRE(exact.rows.size() == 5);
  CHECK(exact.mean_ffe == 0.0);
  CHECK(exact.mean_gpe == 0.0);

  // A silent hypothesis has no voiced overlap: gpe is missing, ffe counts
  // every voiced reference frame.
  mels[1].col(corpus.info.pitch_map.bin).setConstant(corpus.info.pitch_map.unvoiced_code);
  const auto rep = evaluate_mels(corpus, mels);
  CHECK(!rep.rows[1].gpe);
  CHECK(rep.gpe_samples == 4);
  CHECK(rep.rows[1].ffe > 0.0);
  CHECK(rep.mean_ffe == doctest::Approx(rep.rows[1].ffe / 5.0));
  const std::string text = format_eval_report(rep);
  CHECK(text.rfind("# id\tgpe\tffe\tframes\n", 0) == 0);
  CHECK(text.find(corpus.samples[1].id + "\t-\t") != std::string::npos);
  CHECK(text.find("\nmean\t") != std::string::npos);

  mels.pop_back();
  CHECK_THROWS(evaluate_mels(corpus, mels));
}
