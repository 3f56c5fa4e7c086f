#include "mcdub/eval/evaluation.hpp"

#include "mcdub/data/corpus_io.hpp"
#include "mcdub/errors.hpp"
#include "mcdub/eval/metrics.hpp"

#include <sstream>

namespace mcdub::eval {

namespace {

SampleMetrics score(const data::Corpus& corpus, const data::ContextSample& sample, const Matrix& hyp_mel) {
  const ProsodyTrack ref = reference_track(sample);
  const ProsodyTrack hyp = pitch_from_mel(hyp_mel, corpus.info.pitch_map);
  const PitchComparison cmp = compare_pitch(ref, hyp);
  SampleMetrics m;
  m.id = sample.id;
  m.frames = cmp.size();
  m.ffe = ffe(cmp);
  if (cmp.both_voiced > 0) m.gpe = gpe(cmp);
  return m;
}

std::string cell(const std::optional<double>& v) { return v ? data::format_real(*v) : "-"; }

}  // namespace

ProsodyTrack reference_track(const data::ContextSample& sample) {
  ProsodyTrack t;
  t.values = sample.current.pitch;
  t.voiced = sample.current.voiced;
  return t;
}

EvalReport summarize(std::vector<SampleMetrics> rows) {
  EvalReport r;
  r.rows = std::move(rows);
  double gsum = 0.0, fsum = 0.0;
  for (const auto& m : r.rows) {
    fsum += m.ffe;
    if (m.gpe) {
      gsum += *m.gpe;
      ++r.gpe_samples;
    }
  }
  if (!r.rows.empty()) r.mean_ffe = fsum / static_cast<double>(r.rows.size());
  if (r.gpe_samples > 0) r.mean_gpe = gsum / static_cast<double>(r.gpe_samples);
  return r;
}

EvalReport evaluate_model(const DubbingModel& model, const data::Corpus& corpus, const data::ContextConfig& ctx,
                          const data::CorpusStats& stats, const AblationFlags& flags) {
  std::vector<SampleMetrics> rows;
  rows.reserve(corpus.samples.size());
  for (const auto& s : corpus.samples) {
    rows.push_back(score(corpus, s, synthesize_current(model, s, ctx, stats, flags)));
  }
  return summarize(std::move(rows));
}

EvalReport evaluate_mels(const data::Corpus& corpus, const std::vector<Matrix>& hyp_mels) {
  if (hyp_mels.size() != corpus.samples.size()) {
    throw LengthMismatch("one hypothesis mel per sample required");
  }
  std::vector<SampleMetrics> rows;
  for (size_t i = 0; i < hyp_mels.size(); ++i) rows.push_back(score(corpus, corpus.samples[i], hyp_mels[i]));
  return summarize(std::move(rows));
}

std::string format_eval_report(const EvalReport& report) {
  std::ostringstream os;
  os << "# id\tgpe\tffe\tframes\n";
  size_t frames = 0;
  for (const auto& m : report.rows) {
    os << m.id << '\t' << cell(m.gpe) << '\t' << data::format_real(m.ffe) << '\t' << m.frames << '\n';
    frames += m.frames;
  }
  os << "mean\t" << cell(report.mean_gpe) << '\t' << data::format_real(report.mean_ffe) << '\t' << frames << '\n';
  return os.str();
}

}  // namespace mcdub::eval
