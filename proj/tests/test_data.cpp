#include "mcdub/data/array_io.hpp"
#include "mcdub/data/context.hpp"
#include "mcdub/data/corpus_io.hpp"
#include "mcdub/data/synthetic.hpp"
#include "mcdub/errors.hpp"
#include "support.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace mcdub;
using namespace mcdub::data;
using mcdub::test::Rng;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mcdub_test_data_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void check_against_oracle(const ContextSample& s, const ContextConfig& cfg) {
  const SelectedContext sel = select_context(s, cfg);
  const test::OracleSelection o = test::oracle_select(s, cfg.k, cfg.use_prev, cfg.use_fol);
  CHECK(test::selection_mismatch(sel, o, s.frame_cfg.n) == "");
  validate_selection(sel);
}

}  // namespace

TEST_CASE("frame ratio") {
  CHECK(derive_frame_ratio(16000, 160, 25).n == 4);
  CHECK(derive_frame_ratio(16000, 640, 25).n == 1);
  CHECK_THROWS_AS(derive_frame_ratio(16000, 200, 25), NonIntegerRatio);
  CHECK_THROWS_AS(derive_frame_ratio(0, 160, 25), NonIntegerRatio);
  CHECK_THROWS_AS(derive_frame_ratio(16000, -160, 25), NonIntegerRatio);
}

TEST_CASE("context selection examples") {
  Rng rng(11);
  {
    const ContextSample s = test::random_sample(rng, 43, 10, 0, 4);
    const SelectedContext sel = select_context(s, {50, true, true});
    CHECK(sel.bounds.phoneme[kPrevious].size() == 43);
    CHECK(sel.bounds.video[kPrevious].size() == s.previous->video_frames());
  }
  {
    const ContextSample s = test::random_sample(rng, 120, 10, 0, 4);
    const SelectedContext sel = select_context(s, {50, true, true});
    REQUIRE(sel.bounds.phoneme[kPrevious].size() == 50);
    // 1-based indices 71..120
    for (int i = 0; i < 50; ++i) CHECK(sel.phoneme_seq[static_cast<size_t>(i)] == s.previous->phonemes[70 + i]);
  }
  {
    const ContextSample s = test::random_sample(rng, 20, 10, 30, 2);
    const SelectedContext sel = select_context(s, {50, false, false});
    CHECK(sel.bounds.phoneme[kPrevious].empty());
    CHECK(sel.bounds.phoneme[kFollowing].empty());
    CHECK(sel.phoneme_seq == s.current.phonemes);
    CHECK(sel.mel_gt == s.current.mel);
    CHECK(sel.lip_seq == s.current.lip_feats);
  }
  CHECK_THROWS_AS(select_context(test::random_sample(rng, 3, 3, 3, 1), {0, true, true}), ConfigError);
}

TEST_CASE("proportional frames") {
  CHECK(proportional_frames(0, 10, 25) == 0);
  CHECK(proportional_frames(10, 10, 25) == 25);
  CHECK(proportional_frames(15, 10, 25) == 25);
  CHECK(proportional_frames(5, 10, 25) == 13);  // 12.5 rounds up
  CHECK(proportional_frames(1, 3, 10) == 3);
  CHECK(proportional_frames(2, 3, 10) == 7);
}

TEST_CASE("context selection matches slicing oracle") {
  Rng rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = std::array<int, 3>{1, 2, 4}[trial % 3];
    const int t_pre = test::randint(rng, 0, 30);
    const int t_fol = test::randint(rng, 0, 30);
    const ContextSample s = test::random_sample(rng, t_pre, test::randint(rng, 1, 12), t_fol, n);
    const ContextConfig cfg{test::randint(rng, 1, 40), test::randint(rng, 0, 4) != 0, test::randint(rng, 0, 4) != 0};
    INFO("trial " << trial);
    check_against_oracle(s, cfg);
  }
}

TEST_CASE("selection restricted to the current sentence is a fixed point") {
  Rng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const ContextSample s = test::random_sample(rng, 15, test::randint(rng, 1, 10), 15, 2);
    const SelectedContext sel = select_context(s, {8, true, true});
    const ContextSample cur = current_only(sel, s.frame_cfg);
    const SelectedContext again = select_context(cur, {8, true, true});
    CHECK(again.phoneme_seq == s.current.phonemes);
    CHECK(again.mel_gt == s.current.mel);
    CHECK(again.lip_seq == s.current.lip_feats);
    CHECK(again.pitch == s.current.pitch);
  }
}

TEST_CASE("masked mel context") {
  Rng rng(14);
  const ContextSample s = test::random_sample(rng, 10, 6, 8, 4);
  const SelectedContext sel = select_context(s, {5, true, true});
  const Matrix m = build_masked_mel_context(sel);
  const Span cur = sel.bounds.mel[kCurrent];
  CHECK((m.middleRows(cur.begin, cur.size()).array() == kMelMaskValue).all());
  const Span pre = sel.bounds.mel[kPrevious];
  CHECK(m.middleRows(pre.begin, pre.size()) == sel.mel_gt.middleRows(pre.begin, pre.size()));
  const Span fol = sel.bounds.mel[kFollowing];
  CHECK(m.middleRows(fol.begin, fol.size()) == sel.mel_gt.middleRows(fol.begin, fol.size()));

  const SelectedContext alone = select_context(s, {5, false, false});
  CHECK((build_masked_mel_context(alone).array() == 0.0).all());
}

TEST_CASE("bundle validation") {
  Rng rng(15);
  ContextSample s = test::random_sample(rng, 4, 4, 4, 2);
  validate_sample(s);
  ContextSample bad = s;
  bad.current.mel.conservativeResize(bad.current.mel.rows() - 1, Eigen::NoChange);
  CHECK_THROWS_AS(validate_sample(bad), LengthMismatch);
  bad = s;
  bad.current.voiced[0] = 1;
  bad.current.pitch[0] = 0.0;
  CHECK_THROWS_AS(validate_sample(bad), FormatError);
  bad = s;
  bad.frame_cfg.n = 3;
  CHECK_THROWS(validate_sample(bad));
}

TEST_CASE("synthetic generator") {
  const FrameRateConfig fr = derive_frame_ratio(16000, 160, 25);
  ShapeConfig shape;
  const Corpus a = generate_synthetic_corpus(7, 3, fr, shape);
  const Corpus b = generate_synthetic_corpus(7, 3, fr, shape);
  REQUIRE(a.samples.size() == 3);
  for (size_t i = 0; i < 3; ++i) {
    CHECK(a.samples[i].current.mel == b.samples[i].current.mel);
    CHECK(a.samples[i].previous->lip_feats == b.samples[i].previous->lip_feats);
    CHECK(a.samples[i].following->phonemes == b.samples[i].following->phonemes);
  }
  // Per-sample generation does not depend on what else was generated.
  const SyntheticGenerator gen(7, fr, shape);
  CHECK(gen.sample(2).current.mel == a.samples[2].current.mel);

  const Corpus other = generate_synthetic_corpus(8, 3, fr, shape);
  CHECK(other.samples[0].current.mel != a.samples[0].current.mel);

  for (const auto& s : a.samples) {
    for (const auto* bnd : {&*s.previous, &s.current, &*s.following}) {
      CHECK(bnd->mel_frames() == fr.n * bnd->video_frames());
      for (Eigen::Index t = 0; t < bnd->mel_frames(); ++t) {
        const auto i = static_cast<size_t>(t);
        CHECK(bnd->pitch[i] == a.info.pitch_map.decode(bnd->mel(t, a.info.pitch_map.bin)));
        CHECK(bnd->energy[i] == doctest::Approx(bnd->mel.row(t).norm()).epsilon(1e-12));
      }
    }
  }

  ShapeConfig bad = shape;
  bad.n_mels = 0;
  CHECK_THROWS_AS(generate_synthetic_corpus(1, 1, fr, bad), InvalidShapeConfig);
  bad = shape;
  bad.min_phonemes = 10;
  bad.max_phonemes = 5;
  CHECK_THROWS_AS(generate_synthetic_corpus(1, 1, fr, bad), InvalidShapeConfig);
}

TEST_CASE("large generated corpus passes the validator") {
  const FrameRateConfig fr = derive_frame_ratio(16000, 160, 25);
  ShapeConfig shape;
  shape.absent_context_prob = 0.2;
  const Corpus c = generate_synthetic_corpus(21, 1000, fr, shape);
  CHECK_NOTHROW(validate_corpus(c));
  int absent = 0;
  for (const auto& s : c.samples) {
    CHECK(s.current.phoneme_count() >= 4);
    CHECK(s.current.phoneme_count() <= 60);
    absent += !s.previous;
  }
  CHECK(absent > 100);
  CHECK(absent < 300);
}

TEST_CASE("pitch map") {
  const PitchMap m;
  for (double f0 : {60.0, 99.5, 150.0, 399.0}) CHECK(m.decode(m.encode(f0)) == doctest::Approx(f0).epsilon(1e-12));
  CHECK(m.decode(m.unvoiced_code) == 0.0);
  CHECK(m.decode(0.0) == 0.0);
  CHECK(m.encode(60.0) > m.threshold);
}

TEST_CASE("array container round trip") {
  Rng rng(16);
  const Matrix m = test::random_matrix(rng, 5, 3);
  std::stringstream ss;
  write_array(ss, from_matrix(m));
  const std::string bytes = ss.str();
  CHECK(bytes.substr(0, 4) == "MCDA");
  CHECK(bytes.size() == 8 + 16 + 15 * 8);
  CHECK(to_matrix(read_array(ss)) == m);

  const std::vector<int> ids{3, -1, 7};
  const std::vector<std::uint8_t> flags{1, 0, 1, 1};
  const std::vector<double> vals{0.1, -2.5};
  std::stringstream s2;
  write_array(s2, from_ints(ids));
  write_array(s2, from_flags(flags));
  write_array(s2, from_doubles(vals));
  CHECK(to_ints(read_array(s2)) == ids);
  CHECK(to_flags(read_array(s2)) == flags);
  CHECK(to_doubles(read_array(s2)) == vals);

  std::stringstream truncated(bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS_AS(read_array(truncated), FormatError);
  std::string corrupt = bytes;
  corrupt[0] = 'X';
  std::stringstream bad(corrupt);
  CHECK_THROWS_AS(read_array(bad), FormatError);
  std::stringstream s3;
  write_array(s3, from_ints(ids));
  CHECK_THROWS_AS(to_matrix(read_array(s3)), FormatError);
}

TEST_CASE("corpus round trip on disk") {
  const FrameRateConfig fr = derive_frame_ratio(16000, 160, 25);
  ShapeConfig shape;
  shape.max_phonemes = 12;
  shape.absent_context_prob = 0.5;
  const Corpus c = generate_synthetic_corpus(5, 6, fr, shape, 40);
  const fs::path a = scratch_dir("a");
  const fs::path b = scratch_dir("b");
  save_corpus(a, c);
  save_corpus(b, c);
  CHECK(slurp(a / "manifest.txt") == slurp(b / "manifest.txt"));
  CHECK(slurp(a / "s40" / "cur.mel.arr") == slurp(b / "s40" / "cur.mel.arr"));

  const Corpus back = load_corpus(a);
  REQUIRE(back.samples.size() == c.samples.size());
  CHECK(back.info.shape == c.info.shape);
  CHECK(back.info.frame_cfg == c.info.frame_cfg);
  CHECK(back.info.stats.mel_mean == c.info.stats.mel_mean);
  CHECK(back.info.stats.logf0_std == c.info.stats.logf0_std);
  for (size_t i = 0; i < c.samples.size(); ++i) {
    const auto& x = c.samples[i];
    const auto& y = back.samples[i];
    CHECK(x.id == y.id);
    CHECK(x.previous.has_value() == y.previous.has_value());
    CHECK(x.following.has_value() == y.following.has_value());
    CHECK(x.current.mel == y.current.mel);
    CHECK(x.current.pitch == y.current.pitch);
    CHECK(x.current.voiced == y.current.voiced);
    CHECK(x.current.phonemes == y.current.phonemes);
    if (x.previous) CHECK(x.previous->face_feats == y.previous->face_feats);
  }
  const Manifest m = read_manifest(a);
  CHECK(m.entries.size() == 6);
  CHECK(parse_manifest(format_manifest(m)).entries.size() == 6);
  CHECK_THROWS(parse_manifest("not a manifest\n"));
}
