#include "mcdub/training/ksweep.hpp"

#include "mcdub/data/corpus_io.hpp"
#include "mcdub/errors.hpp"
#include "mcdub/eval/evaluation.hpp"

#include <sstream>

namespace mcdub::training {

std::vector<KSweepRow> k_sweep(const KSweepInputs& in, const ModelConfig& model_cfg, const TrainConfig& cfg,
                               std::span<const int> k_list) {
  if (k_list.empty()) throw ConfigError("k list is empty");
  if (in.context == nullptr || in.eval == nullptr) throw ConfigError("k sweep needs context and evaluation corpora");
  for (int k : k_list) {
    if (k < 1) throw ConfigError("k must be >= 1");
  }

  std::optional<Checkpoint> shared;
  const Checkpoint* stage1 = in.stage1;
  if (stage1 == nullptr && cfg.two_stage) {
    if (in.single == nullptr) throw ConfigError("k sweep needs a single-sentence corpus for stage 1");
    DubbingModel model(model_cfg, cfg.seed);
    shared = train_stage1(model, *in.single, in.stats, cfg).checkpoint;
    stage1 = &*shared;
  }

  std::vector<KSweepRow> rows;
  for (int k : k_list) {
    TrainConfig run = cfg;
    run.context.k = k;
    DubbingModel model(model_cfg, cfg.seed);
    train_stage2(model, *in.context, in.stats, cfg.two_stage ? stage1 : nullptr, run);
    const auto report = eval::evaluate_model(model, *in.eval, run.context, in.stats, run.ablation);
    const auto examples = make_examples(*in.eval, run.context, in.stats, run.ablation);
    KSweepRow row;
    row.k = k;
    row.gpe = report.mean_gpe;
    row.ffe = report.mean_ffe;
    row.l_sum = evaluate_loss(model, examples, run.ablation, run.weights).l_sum;
    row.samples = report.rows.size();
    rows.push_back(row);
  }
  return rows;
}

std::string format_ksweep_report(const std::vector<KSweepRow>& rows) {
  std::ostringstream os;
  os << kKSweepHeader << '\n';
  for (const auto& r : rows) {
    os << r.k << '\t' << (r.gpe ? data::format_real(*r.gpe) : "-") << '\t' << data::format_real(r.ffe) << '\t'
       << data::format_real(r.l_sum) << '\t' << r.samples << '\n';
  }
  return os.str();
}

std::vector<KSweepRow> parse_ksweep_report(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kKSweepHeader) throw FormatError("k sweep report: bad header");
  std::vector<KSweepRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::vector<std::string> f;
    std::string cell;
    while (std::getline(ls, cell, '\t')) f.push_back(cell);
    if (f.size() != 5) throw FormatError("k sweep report: expected 5 columns: " + line);
    try {
      KSweepRow r;
      size_t used = 0;
      r.k = std::stoi(f[0], &used);
      if (used != f[0].size()) throw FormatError("k sweep report: bad k: " + f[0]);
      if (f[1] != "-") r.gpe = data::parse_real(f[1]);
      r.ffe = data::parse_real(f[2]);
      r.l_sum = data::parse_real(f[3]);
      r.samples = std::stoull(f[4], &used);
      if (used != f[4].size()) throw FormatError("k sweep report: bad sample count: " + f[4]);
      rows.push_back(r);
    } catch (const std::logic_error&) {
      throw FormatError("k sweep report: unparsable row: " + line);
    }
  }
  return rows;
}

}  // namespace mcdub::training
