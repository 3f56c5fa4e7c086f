#include "mcdub/cli/commands.hpp"
#include "mcdub/data/array_io.hpp"
#include "mcdub/data/corpus_io.hpp"
#include "mcdub/errors.hpp"
#include "mcdub/training/checkpoint.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

using namespace mcdub;
using namespace mcdub::cli;

namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("mcdub_cli_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

CliOverrides tiny(const fs::path& out) {
  CliOverrides o;
  o.out = out;
  o.settings = {"data.single_count=3", "data.train_count=3", "data.valid_count=2", "data.test_count=2",
                "data.vocab=10",       "data.d_lip=6",       "data.d_face=4",       "data.n_mels=12",
                "data.min_phonemes=3", "data.max_phonemes=6", "model.dim=8",        "model.ffn_dim=16",
                "model.text_blocks=1", "model.lip_blocks=1", "model.decoder_blocks=1", "model.postnet_layers=2",
                "model.postnet_channels=8", "model.predictor_channels=8", "model.dab_descriptors=4",
                "train.batch_size=2",  "train.steps_stage1=2", "train.steps_stage2=3"};
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = slurp(e.path());
  }
  return out;
}

int run_cli(const std::string& args) {
  const int status = std::system((std::string(MCDUB_CLI_PATH) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("preset resolution and precedence") {
  const RunConfig toy = resolve_config({});
  CHECK(toy.preset == "toy");
  CHECK(toy.model.frame_ratio == 4);
  CHECK(toy.model.n_mels == toy.data.shape.n_mels);
  CHECK(toy.train.lr == 2e-4);
  CHECK(toy.train.batch_size == 8);

  CliOverrides p;
  p.preset = "paper";
  const RunConfig paper = resolve_config(p);
  CHECK(paper.model.dim == 256);
  CHECK(paper.model.heads == 2);
  CHECK(paper.model.aligner_heads == 8);

  TempDir dir("prec");
  const fs::path file = dir.path / "run.ini";
  std::ofstream(file) << "# comment\npreset = paper\nseed = 5\n[train]\nlr = 1e-3  # inline\nk = 7\n[model]\ndim = 64\n";
  CliOverrides o;
  o.config_file = file;
  RunConfig c = resolve_config(o);
  CHECK(c.preset == "paper");
  CHECK(c.seed == 5);
  CHECK(c.train.seed == 5);
  CHECK(c.train.lr == 1e-3);
  CHECK(c.train.context.k == 7);
  CHECK(c.model.dim == 64);

  o.settings = {"train.lr=3e-3", "train.k=9"};
  o.k = 11;
  o.seed = 8;
  o.no_prev = true;
  o.no_cpp = true;
  o.preset = "toy";
  c = resolve_config(o);
  CHECK(c.preset == "toy");
  CHECK(c.train.lr == 3e-3);
  CHECK(c.train.context.k == 11);
  CHECK(c.seed == 8);
  CHECK(!c.train.context.use_prev);
  CHECK(c.train.context.use_fol);
  CHECK(c.train.ablation.no_cpp);
}

TEST_CASE("config errors") {
  auto with = [](std::vector<std::string> s) {
    CliOverrides o;
    o.settings = std::move(s);
    return o;
  };
  CHECK_THROWS_AS(resolve_config(with({"train.nonsense=1"})), ConfigError);
  CHECK_THROWS_AS(resolve_config(with({"bogus.key=1"})), ConfigError);
  CHECK_THROWS_AS(resolve_config(with({"train.lr=fast"})), ConfigError);
  CHECK_THROWS_AS(resolve_config(with({"model.n_mels=40"})), ConfigError);
  CHECK_THROWS_AS(resolve_config(with({"train.k=0"})), ConfigError);
  CHECK_THROWS_AS(resolve_config(with({"data.hop_size=170"})), ConfigError);
  CHECK_THROWS_AS(resolve_config(with({"eval.k_list=10,x"})), ConfigError);
  CHECK_THROWS_AS(resolve_config(with({"split=dev"})), ConfigError);
  CHECK_THROWS_AS(resolve_config(with({"no equals sign"})), ConfigError);
  CliOverrides p;
  p.preset = "huge";
  CHECK_THROWS_AS(resolve_config(p), ConfigError);
  CliOverrides f;
  f.config_file = "/nonexistent/run.ini";
  CHECK_THROWS_AS(resolve_config(f), ConfigError);

  CHECK(exit_code_for(ConfigError("x")) == kExitConfig);
  CHECK(exit_code_for(NonIntegerRatio("x")) == kExitConfig);
  CHECK(exit_code_for(DivergenceDetected("x")) == kExitDivergence);
  CHECK(exit_code_for(IncompatibleCheckpoint("x")) == kExitCheckpoint);
  CHECK(exit_code_for(std::runtime_error("x")) == kExitFailure);
}

TEST_CASE("formatted config round trips") {
  RunConfig c = resolve_config(tiny("x"));
  c.k_list = {3, 5};
  c.train.weights.pitch = 0.25;
  const std::string text = format_config(c);
  RunConfig back = preset_config("toy");
  apply_config_text(back, text);
  back.out = c.out;
  back.finalize();
  CHECK(format_config(back) == text);
  CHECK(back.model.to_text() == c.model.to_text());
  CHECK(back.train.to_text() == c.train.to_text());
}

TEST_CASE("command pipeline") {
  TempDir dir("pipe");
  std::ostringstream log;
  RunConfig cfg = resolve_config(tiny(dir.path / "a"));

  cmd_gen_data(cfg, log);
  const auto first = tree(cfg.corpus_root());
  CHECK(data::load_corpus(cfg.corpus_root() / "train").samples.size() == 3);
  CHECK(data::load_corpus(cfg.corpus_root() / "test").samples.size() == 2);
  const auto single = data::load_corpus(cfg.corpus_root() / "single");
  CHECK(!single.samples[0].previous);
  CHECK(!single.samples[0].following);
  cmd_gen_data(cfg, log);
  CHECK(tree(cfg.corpus_root()) == first);

  const auto summary = cmd_train(cfg, log);
  CHECK(summary.final_step == 5);
  CHECK(fs::exists(cfg.out / "checkpoints" / "stage1_final.ckpt"));
  CHECK(fs::exists(summary.final_checkpoint));
  CHECK(fs::exists(cfg.out / "config.ini"));
  const auto log2 = training::read_loss_log(cfg.out / "loss_stage2.log");
  REQUIRE(log2.size() == 3);
  CHECK(log2.front().step == 3);
  CHECK(log2.back().step == 5);

  // Resuming from the final checkpoint with a larger budget continues the
  // step counter.
  RunConfig more = cfg;
  more.train.steps_stage2 = 5;
  more.checkpoint = summary.final_checkpoint;
  CHECK(cmd_train(more, log).final_step == 7);
  const auto log3 = training::read_loss_log(cfg.out / "loss_stage2.log");
  REQUIRE(log3.size() == 5);
  CHECK(log3.back().step == 7);

  cfg.split = "test";
  const auto paths = cmd_synthesize(cfg, {}, log);
  const auto test = data::load_corpus(cfg.corpus_root() / "test");
  REQUIRE(paths.size() == 2);
  for (size_t i = 0; i < 2; ++i) {
    const Matrix mel = data::to_matrix(data::load_array(paths[i]));
    CHECK(mel.rows() == 4 * test.samples[i].current.lip_feats.rows());
    CHECK(mel.cols() == 12);
    CHECK(mel.allFinite());
  }
  const auto synth_bytes = slurp(paths[0]);
  cmd_synthesize(cfg, {test.samples[0].id}, log);
  CHECK(slurp(paths[0]) == synth_bytes);
  CHECK_THROWS_AS(cmd_synthesize(cfg, {"missing"}, log), ConfigError);

  const auto gt = cmd_evaluate(cfg, true, log);
  CHECK(gt.mean_ffe == 0.0);
  CHECK(gt.mean_gpe == 0.0);
  CHECK(fs::exists(cfg.out / "eval_test_gt.tsv"));
  const auto rep = cmd_evaluate(cfg, false, log);
  CHECK(rep.rows.size() == 2);
  std::istringstream report(slurp(cfg.out / "eval_test.tsv"));
  int lines = 0;
  for (std::string line; std::getline(report, line);) ++lines;
  CHECK(lines == 4);

  // A checkpoint from another architecture is refused.
  RunConfig other = cfg;
  other.model.dim = 16;
  CHECK_THROWS_AS(cmd_evaluate(other, false, log), IncompatibleCheckpoint);
}

TEST_CASE("training without stage 1") {
  TempDir dir("nots");
  std::ostringstream log;
  CliOverrides o = tiny(dir.path);
  o.no_two_stage = true;
  const RunConfig cfg = resolve_config(o);
  cmd_gen_data(cfg, log);
  CHECK(cmd_train(cfg, log).final_step == 3);
  CHECK(!fs::exists(cfg.out / "checkpoints" / "stage1_final.ckpt"));
  CHECK(!fs::exists(cfg.out / "loss_stage1.log"));
  CHECK(fs::exists(cfg.out / "checkpoints" / "stage2_final.ckpt"));
}

TEST_CASE("executable exit codes") {
  TempDir dir("exe");
  const std::string out = dir.path.string();
  CHECK(run_cli("--help") == 0);
  CHECK(run_cli("gen-data --out " + out + " --preset nope") == kExitConfig);
  CHECK(run_cli("train --out " + out + " --set train.lr=-1") == kExitConfig);
  CHECK(run_cli("frobnicate") == kExitConfig);
  const std::string sets = " --set data.single_count=2 --set data.train_count=2 --set data.valid_count=1"
                           " --set data.test_count=1 --set data.max_phonemes=6 --set model.dim=8"
                           " --set model.ffn_dim=16 --set train.steps_stage1=1 --set train.steps_stage2=1";
  CHECK(run_cli("gen-data --out " + out + sets) == 0);
  CHECK(run_cli("train --out " + out + sets) == 0);
  CHECK(run_cli("evaluate --out " + out + sets) == 0);
  CHECK(run_cli("evaluate --out " + out + sets + " --set model.heads=4") == kExitCheckpoint);
  CHECK(run_cli("synthesize --out " + out + sets + " --checkpoint " + out + "/absent.ckpt") != 0);
}
