#pragma once

// K-sweep report, tab-separated with a fixed header:
//
//   # k  gpe  ffe  l_sum  samples
//
// gpe is "-" when no evaluation sample had a voiced overlap.

#include "mcdub/data/synthetic.hpp"
#include "mcdub/model_config.hpp"
#include "mcdub/training/trainer.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mcdub::training {

inline constexpr const char* kKSweepHeader = "# k\tgpe\tffe\tl_sum\tsamples";

struct KSweepRow {
  int k = 0;
  std::optional<double> gpe;
  double ffe = 0.0;
  double l_sum = 0.0;  // mean evaluation loss on the evaluation corpus
  size_t samples = 0;
};

struct KSweepInputs {
  const data::Corpus* single = nullptr;   // stage-1 corpus; unused when stage1 is given or two_stage is off
  const data::Corpus* context = nullptr;  // stage-2 corpus
  const data::Corpus* eval = nullptr;
  data::CorpusStats stats;
  const Checkpoint* stage1 = nullptr;     // shared stage-1 result, trained once when null
};

// Trains one stage-2 model per K from a shared stage-1 checkpoint and
// evaluates each. Throws ConfigError on an empty K list.
std::vector<KSweepRow> k_sweep(const KSweepInputs& in, const ModelConfig& model_cfg, const TrainConfig& cfg,
                               std::span<const int> k_list);

std::string format_ksweep_report(const std::vector<KSweepRow>& rows);
// Throws FormatError unless the text follows the documented columns.
std::vector<KSweepRow> parse_ksweep_report(const std::string& text);

}  // namespace mcdub::training
