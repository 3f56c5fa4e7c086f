#include "mcdub/training/trainer.hpp"

#include "mcdub/data/corpus_io.hpp"
#include "mcdub/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace mcdub::training {

void TrainConfig::validate() const {
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("lr must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("betas must lie in [0,1)");
  if (!(eps > 0.0)) throw ConfigError("eps must be positive");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (steps_stage1 < 0 || steps_stage2 < 0) throw ConfigError("step counts must be >= 0");
  if (context.k < 1) throw ConfigError("k must be >= 1");
  if (save_every < 0) throw ConfigError("save_every must be >= 0");
}

std::string TrainConfig::to_text() const {
  using data::format_real;
  std::ostringstream os;
  os << "lr=" << format_real(lr) << "\n"
     << "beta1=" << format_real(beta1) << "\n"
     << "beta2=" << format_real(beta2) << "\n"
     << "eps=" << format_real(eps) << "\n"
     << "batch_size=" << batch_size << "\n"
     << "steps_stage1=" << steps_stage1 << "\n"
     << "steps_stage2=" << steps_stage2 << "\n"
     << "seed=" << seed << "\n"
     << "k=" << context.k << "\n"
     << "use_prev=" << context.use_prev << "\n"
     << "use_fol=" << context.use_fol << "\n"
     << "no_cda_context=" << ablation.no_cda_context << "\n"
     << "no_cpp=" << ablation.no_cpp << "\n"
     << "no_cad_context=" << ablation.no_cad_context << "\n"
     << "two_stage=" << two_stage << "\n"
     << "clip_norm=" << format_real(clip_norm) << "\n"
     << "weight_energy=" << format_real(weights.energy) << "\n"
     << "weight_pitch=" << format_real(weights.pitch) << "\n"
     << "weight_mel=" << format_real(weights.mel) << "\n"
     << "save_every=" << save_every << "\n";
  return os.str();
}

Adam::Adam(const nn::ParamStore& params, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const auto& [_, v] : params.entries()) {
    m_.push_back(Matrix::Zero(v.rows(), v.cols()));
    v_.push_back(Matrix::Zero(v.rows(), v.cols()));
  }
}

void Adam::step(nn::ParamStore& params) {
  if (params.size() != m_.size()) throw DimMismatch("optimizer state does not match parameters");
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  size_t i = 0;
  for (const auto& [_, var] : params.entries()) {
    const Matrix& g = var.node()->grad;
    if (g.size() != 0) {
      m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
      v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g.cwiseProduct(g);
    } else {
      m_[i] *= beta1_;
      v_[i] *= beta2_;
    }
    const Matrix m_hat = m_[i] / bc1;
    const Matrix v_hat = v_[i] / bc2;
    var.node()->value.array() -= lr_ * m_hat.array() / (v_hat.array().sqrt() + eps_);
    ++i;
  }
}

void Adam::restore(std::uint64_t t, std::vector<Matrix> m, std::vector<Matrix> v) {
  if (m.size() != m_.size() || v.size() != v_.size()) throw IncompatibleCheckpoint("optimizer state size mismatch");
  for (size_t i = 0; i < m.size(); ++i) {
    if (m[i].rows() != m_[i].rows() || m[i].cols() != m_[i].cols() || v[i].rows() != v_[i].rows() ||
        v[i].cols() != v_[i].cols()) {
      throw IncompatibleCheckpoint("optimizer moment shape mismatch");
    }
  }
  t_ = t;
  m_ = std::move(m);
  v_ = std::move(v);
}

double clip_grad_norm(nn::ParamStore& params, double max_norm) {
  const double norm = params.grad_norm();
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / (norm + 1e-12);
    for (const auto& [_, var] : params.entries()) {
      if (var.node()->grad.size() != 0) var.node()->grad *= s;
    }
  }
  return norm;
}

void append_loss_record(const std::filesystem::path& path, const LossRecord& rec) {
  const bool fresh = !std::filesystem::exists(path);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::app);
  if (!out) throw IoError("cannot append to " + path.string());
  if (fresh) out << "# stage\tstep\tl_energy\tl_pitch\tl_mel\tl_sum\n";
  out << rec.stage << '\t' << rec.step << '\t' << data::format_real(rec.loss.l_energy) << '\t'
      << data::format_real(rec.loss.l_pitch) << '\t' << data::format_real(rec.loss.l_mel) << '\t'
      << data::format_real(rec.loss.l_sum) << '\n';
}

std::vector<LossRecord> read_loss_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<LossRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string f[6];
    for (auto& s : f) {
      if (!std::getline(ls, s, '\t')) throw FormatError("malformed loss log line: " + line);
    }
    LossRecord r;
    r.stage = std::stoi(f[0]);
    r.step = std::stoull(f[1]);
    r.loss = {data::parse_real(f[2]), data::parse_real(f[3]), data::parse_real(f[4]), data::parse_real(f[5])};
    out.push_back(r);
  }
  return out;
}

Trainer::Trainer(DubbingModel& model, const TrainConfig& cfg, int stage)
    : model_(model),
      cfg_(cfg),
      stage_(stage),
      adam_(model.params(), cfg.lr, cfg.beta1, cfg.beta2, cfg.eps),
      rng_(cfg.seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(stage)) {
  cfg_.validate();
}

void Trainer::resume(const Checkpoint& ck) {
  load_parameters(model_, ck, true);
  if (!ck.first_moment.empty()) adam_.restore(ck.optimizer_step, ck.first_moment, ck.second_moment);
  step_ = ck.step;
}

LossBreakdown Trainer::train_step(std::span<const TrainingExample> examples) {
  const size_t n = examples.size();
  const size_t b = std::min<size_t>(static_cast<size_t>(cfg_.batch_size), n);
  model_.params().zero_grad();
  LossBreakdown mean;
  const double inv = 1.0 / static_cast<double>(b);
  const nn::Mode mode{&rng_};
  for (size_t j = 0; j < b; ++j) {
    if (cursor_ == 0) {
      order_.resize(n);
      std::iota(order_.begin(), order_.end(), size_t{0});
      std::shuffle(order_.begin(), order_.end(), rng_);
    }
    const TrainingExample& ex = examples[order_[cursor_]];
    cursor_ = (cursor_ + 1) % n;
    const ForwardResult fwd = model_.forward(ex, cfg_.ablation, mode);
    const LossGraph g = build_losses(fwd, ex, cfg_.weights);
    const LossBreakdown v = g.values();
    mean.l_energy += v.l_energy * inv;
    mean.l_pitch += v.l_pitch * inv;
    mean.l_mel += v.l_mel * inv;
    mean.l_sum += v.l_sum * inv;
    if (!std::isfinite(v.l_sum)) return mean;
    ad::backward(ad::scale(g.total, inv));
  }
  return mean;
}

StageResult Trainer::run(std::span<const TrainingExample> examples, std::uint64_t until_step,
                         const StageOptions& opts) {
  if (examples.empty() && step_ < until_step) throw ConfigError("no training examples");
  StageResult result;
  const std::string tag = "stage" + std::to_string(stage_);
  const auto ckpt_dir = opts.out_dir / "checkpoints";
  while (step_ < until_step) {
    const LossBreakdown loss = train_step(examples);
    const double gnorm = model_.params().grad_norm();
    if (!std::isfinite(loss.l_sum) || !std::isfinite(gnorm)) {
      // Parameters have not been touched by this step yet.
      if (!opts.out_dir.empty()) {
        save_checkpoint(ckpt_dir / (tag + "_last_good.ckpt"), capture(model_, &adam_, stage_, step_, cfg_.to_text()));
      }
      model_.params().zero_grad();
      throw DivergenceDetected("non-finite loss or gradient at step " + std::to_string(step_ + 1));
    }
    clip_grad_norm(model_.params(), cfg_.clip_norm);
    adam_.step(model_.params());
    model_.params().zero_grad();
    ++step_;
    const LossRecord rec{stage_, step_, loss};
    result.records.push_back(rec);
    if (!opts.out_dir.empty()) append_loss_record(opts.out_dir / ("loss_" + tag + ".log"), rec);
    if (opts.on_step) opts.on_step(rec);
    if (!opts.out_dir.empty() && cfg_.save_every > 0 && step_ % static_cast<std::uint64_t>(cfg_.save_every) == 0) {
      save_checkpoint(ckpt_dir / (tag + "_step" + std::to_string(step_) + ".ckpt"),
                      capture(model_, &adam_, stage_, step_, cfg_.to_text()));
    }
  }
  result.checkpoint = capture(model_, &adam_, stage_, step_, cfg_.to_text());
  if (!opts.out_dir.empty()) save_checkpoint(ckpt_dir / (tag + "_final.ckpt"), result.checkpoint);
  return result;
}

LossBreakdown evaluate_loss(const DubbingModel& model, std::span<const TrainingExample> examples,
                            const AblationFlags& flags, const LossWeights& weights) {
  LossBreakdown mean;
  if (examples.empty()) return mean;
  const double inv = 1.0 / static_cast<double>(examples.size());
  for (const auto& ex : examples) {
    const LossBreakdown v = build_losses(model.forward(ex, flags), ex, weights).values();
    mean.l_energy += v.l_energy * inv;
    mean.l_pitch += v.l_pitch * inv;
    mean.l_mel += v.l_mel * inv;
    mean.l_sum += v.l_sum * inv;
  }
  return mean;
}

std::vector<TrainingExample> make_examples(const data::Corpus& corpus, const data::ContextConfig& ctx,
                                           const data::CorpusStats& stats, const AblationFlags& flags) {
  std::vector<TrainingExample> out;
  out.reserve(corpus.samples.size());
  for (const auto& s : corpus.samples) out.push_back(make_example(s, ctx, stats, flags));
  return out;
}

data::ContextConfig single_sentence(const data::ContextConfig& ctx) {
  data::ContextConfig out = ctx;
  out.use_prev = false;
  out.use_fol = false;
  return out;
}

StageResult train_stage1(DubbingModel& model, const data::Corpus& corpus, const data::CorpusStats& stats,
                         const TrainConfig& cfg, const StageOptions& opts) {
  const auto examples = make_examples(corpus, single_sentence(cfg.context), stats, cfg.ablation);
  Trainer trainer(model, cfg, 1);
  return trainer.run(examples, static_cast<std::uint64_t>(cfg.steps_stage1), opts);
}

StageResult train_stage2(DubbingModel& model, const data::Corpus& corpus, const data::CorpusStats& stats,
                         const Checkpoint* init, const TrainConfig& cfg, const StageOptions& opts) {
  Trainer trainer(model, cfg, 2);
  if (init != nullptr) {
    if (init->stage != 1) throw IncompatibleCheckpoint("stage 2 must start from a stage-1 checkpoint");
    load_parameters(model, *init, true);
    trainer.set_step(init->step);
  }
  const auto examples = make_examples(corpus, cfg.context, stats, cfg.ablation);
  return trainer.run(examples, trainer.step() + static_cast<std::uint64_t>(cfg.steps_stage2), opts);
}

}  // namespace mcdub::training
