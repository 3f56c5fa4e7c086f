#pragma once

// Corpus-level evaluation. Reports are tab-separated text:
//
//   # id  gpe  ffe  frames
//   s200000  12.5  8.75  96
//   ...
//   mean  10.1  7.9  <total frames>
//
// A sample with no frame voiced in both tracks has gpe "-" and is left out
// of the gpe mean.

#include "mcdub/data/synthetic.hpp"
#include "mcdub/model.hpp"
#include "mcdub/prosody_track.hpp"

#include <optional>
#include <string>
#include <vector>

namespace mcdub::eval {

struct SampleMetrics {
  std::string id;
  std::optional<double> gpe;
  double ffe = 0.0;
  size_t frames = 0;
};

struct EvalReport {
  std::vector<SampleMetrics> rows;
  std::optional<double> mean_gpe;
  double mean_ffe = 0.0;
  size_t gpe_samples = 0;
};

// Current-sentence ground-truth pitch track.
ProsodyTrack reference_track(const data::ContextSample& sample);

EvalReport summarize(std::vector<SampleMetrics> rows);

// Synthesizes every sample and compares decoded pitch against ground truth.
EvalReport evaluate_model(const DubbingModel& model, const data::Corpus& corpus, const data::ContextConfig& ctx,
                          const data::CorpusStats& stats, const AblationFlags& flags = {});

// Compares the given hypothesis mels (raw space, one per sample, same order)
// against ground truth.
EvalReport evaluate_mels(const data::Corpus& corpus, const std::vector<Matrix>& hyp_mels);

std::string format_eval_report(const EvalReport& report);

}  // namespace mcdub::eval
