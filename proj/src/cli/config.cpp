#include "mcdub/cli/config.hpp"

#include "mcdub/data/context.hpp"
#include "mcdub/data/corpus_io.hpp"
#include "mcdub/errors.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace mcdub::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string where(const std::string& section, const std::string& key) {
  return section.empty() ? key : section + "." + key;
}

template <typename T>
T parse_int(const std::string& section, const std::string& key, const std::string& v) {
  T out{};
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty()) {
    throw ConfigError(where(section, key) + ": expected integer, got '" + v + "'");
  }
  return out;
}

double parse_double(const std::string& section, const std::string& key, const std::string& v) {
  try {
    return data::parse_real(v);
  } catch (const FormatError&) {
    throw ConfigError(where(section, key) + ": expected number, got '" + v + "'");
  }
}

bool parse_bool(const std::string& section, const std::string& key, const std::string& v) {
  if (v == "1" || v == "true") return true;
  if (v == "0" || v == "false") return false;
  throw ConfigError(where(section, key) + ": expected true/false, got '" + v + "'");
}

std::vector<int> parse_int_list(const std::string& section, const std::string& key, const std::string& v) {
  std::vector<int> out;
  std::istringstream in(v);
  for (std::string item; std::getline(in, item, ',');) out.push_back(parse_int<int>(section, key, trim(item)));
  if (out.empty()) throw ConfigError(where(section, key) + ": empty list");
  return out;
}

void apply_data(DataSettings& d, const std::string& key, const std::string& v) {
  const std::string s = "data";
  auto& sh = d.shape;
  if (key == "single_count") d.single_count = parse_int<int>(s, key, v);
  else if (key == "train_count") d.train_count = parse_int<int>(s, key, v);
  else if (key == "valid_count") d.valid_count = parse_int<int>(s, key, v);
  else if (key == "test_count") d.test_count = parse_int<int>(s, key, v);
  else if (key == "sample_rate") d.frame.sr = parse_int<int>(s, key, v);
  else if (key == "hop_size") d.frame.hs = parse_int<int>(s, key, v);
  else if (key == "fps") d.frame.fps = parse_int<int>(s, key, v);
  else if (key == "vocab") sh.vocab = parse_int<int>(s, key, v);
  else if (key == "d_lip") sh.d_lip = parse_int<int>(s, key, v);
  else if (key == "d_face") sh.d_face = parse_int<int>(s, key, v);
  else if (key == "n_mels") sh.n_mels = parse_int<int>(s, key, v);
  else if (key == "min_phonemes") sh.min_phonemes = parse_int<int>(s, key, v);
  else if (key == "max_phonemes") sh.max_phonemes = parse_int<int>(s, key, v);
  else if (key == "min_frames_per_phoneme") sh.min_frames_per_phoneme = parse_int<int>(s, key, v);
  else if (key == "max_frames_per_phoneme") sh.max_frames_per_phoneme = parse_int<int>(s, key, v);
  else if (key == "latent_dim") sh.latent_dim = parse_int<int>(s, key, v);
  else if (key == "absent_context_prob") sh.absent_context_prob = parse_double(s, key, v);
  else throw ConfigError("unknown key data." + key);
}

// Data-facing model fields come from [data].
bool data_facing(const std::string& key) {
  return key == "vocab" || key == "d_lip" || key == "d_face" || key == "n_mels" || key == "frame_ratio";
}

void apply_train(training::TrainConfig& t, const std::string& key, const std::string& v) {
  const std::string s = "train";
  if (key == "lr") t.lr = parse_double(s, key, v);
  else if (key == "beta1") t.beta1 = parse_double(s, key, v);
  else if (key == "beta2") t.beta2 = parse_double(s, key, v);
  else if (key == "eps") t.eps = parse_double(s, key, v);
  else if (key == "batch_size") t.batch_size = parse_int<int>(s, key, v);
  else if (key == "steps_stage1") t.steps_stage1 = parse_int<int>(s, key, v);
  else if (key == "steps_stage2") t.steps_stage2 = parse_int<int>(s, key, v);
  else if (key == "clip_norm") t.clip_norm = parse_double(s, key, v);
  else if (key == "weight_energy") t.weights.energy = parse_double(s, key, v);
  else if (key == "weight_pitch") t.weights.pitch = parse_double(s, key, v);
  else if (key == "weight_mel") t.weights.mel = parse_double(s, key, v);
  else if (key == "save_every") t.save_every = parse_int<int>(s, key, v);
  else if (key == "k") t.context.k = parse_int<int>(s, key, v);
  else if (key == "use_prev") t.context.use_prev = parse_bool(s, key, v);
  else if (key == "use_fol") t.context.use_fol = parse_bool(s, key, v);
  else if (key == "no_cda_context") t.ablation.no_cda_context = parse_bool(s, key, v);
  else if (key == "no_cpp") t.ablation.no_cpp = parse_bool(s, key, v);
  else if (key == "no_cad_context") t.ablation.no_cad_context = parse_bool(s, key, v);
  else if (key == "two_stage") t.two_stage = parse_bool(s, key, v);
  else throw ConfigError("unknown key train." + key);
}

}  // namespace

RunConfig preset_config(const std::string& name) {
  RunConfig c;
  c.preset = name;
  if (name == "toy") {
    c.data.shape.min_phonemes = 4;
    c.data.shape.max_phonemes = 24;
    c.model = ModelConfig::toy();
  } else if (name == "paper") {
    c.model = ModelConfig::paper();
    c.train.lr = 2e-4;
    c.train.batch_size = 8;
    c.train.context.k = 50;
  } else {
    throw ConfigError("unknown preset '" + name + "' (expected toy or paper)");
  }
  return c;
}

void apply_setting(RunConfig& cfg, const std::string& section, const std::string& key, const std::string& value) {
  if (section.empty()) {
    if (key == "preset") {
      if (value != cfg.preset) throw ConfigError("preset must be chosen before other settings");
    } else if (key == "seed") {
      cfg.seed = parse_int<std::uint64_t>(section, key, value);
    } else if (key == "split") {
      cfg.split = value;
    } else {
      throw ConfigError("unknown top-level key " + key);
    }
  } else if (section == "data") {
    apply_data(cfg.data, key, value);
  } else if (section == "model") {
    if (data_facing(key)) throw ConfigError("model." + key + " is derived from [data]");
    if (!cfg.model.set(key, value)) throw ConfigError("unknown key model." + key);
  } else if (section == "train") {
    apply_train(cfg.train, key, value);
  } else if (section == "eval") {
    if (key == "k_list") cfg.k_list = parse_int_list(section, key, value);
    else throw ConfigError("unknown key eval." + key);
  } else {
    throw ConfigError("unknown section [" + section + "]");
  }
}

void apply_config_text(RunConfig& cfg, const std::string& text) {
  std::istringstream in(text);
  std::string section;
  int lineno = 0;
  for (std::string raw; std::getline(in, raw);) {
    ++lineno;
    std::string line = trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("line " + std::to_string(lineno) + ": bad section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    apply_setting(cfg, section, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

std::optional<std::string> preset_in(const std::string& text) {
  std::istringstream in(text);
  for (std::string raw; std::getline(in, raw);) {
    const std::string line = trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    if (line.front() == '[') return std::nullopt;
    const auto eq = line.find('=');
    if (eq != std::string::npos && trim(line.substr(0, eq)) == "preset") return trim(line.substr(eq + 1));
  }
  return std::nullopt;
}

std::string format_config(const RunConfig& c) {
  using data::format_real;
  const auto& d = c.data;
  const auto& t = c.train;
  std::ostringstream os;
  os << "preset = " << c.preset << "\n"
     << "seed = " << c.seed << "\n"
     << "split = " << c.split << "\n\n[data]\n"
     << "single_count = " << d.single_count << "\n"
     << "train_count = " << d.train_count << "\n"
     << "valid_count = " << d.valid_count << "\n"
     << "test_count = " << d.test_count << "\n"
     << "sample_rate = " << d.frame.sr << "\n"
     << "hop_size = " << d.frame.hs << "\n"
     << "fps = " << d.frame.fps << "\n"
     << "vocab = " << d.shape.vocab << "\n"
     << "d_lip = " << d.shape.d_lip << "\n"
     << "d_face = " << d.shape.d_face << "\n"
     << "n_mels = " << d.shape.n_mels << "\n"
     << "min_phonemes = " << d.shape.min_phonemes << "\n"
     << "max_phonemes = " << d.shape.max_phonemes << "\n"
     << "min_frames_per_phoneme = " << d.shape.min_frames_per_phoneme << "\n"
     << "max_frames_per_phoneme = " << d.shape.max_frames_per_phoneme << "\n"
     << "latent_dim = " << d.shape.latent_dim << "\n"
     << "absent_context_prob = " << format_real(d.shape.absent_context_prob) << "\n\n[model]\n";
  std::istringstream model_lines(c.model.to_text());
  for (std::string line; std::getline(model_lines, line);) {
    const auto eq = line.find('=');
    if (eq == std::string::npos || data_facing(line.substr(0, eq))) continue;
    os << line.substr(0, eq) << " = " << line.substr(eq + 1) << "\n";
  }
  os << "\n[train]\n"
     << "lr = " << format_real(t.lr) << "\n"
     << "beta1 = " << format_real(t.beta1) << "\n"
     << "beta2 = " << format_real(t.beta2) << "\n"
     << "eps = " << format_real(t.eps) << "\n"
     << "batch_size = " << t.batch_size << "\n"
     << "steps_stage1 = " << t.steps_stage1 << "\n"
     << "steps_stage2 = " << t.steps_stage2 << "\n"
     << "clip_norm = " << format_real(t.clip_norm) << "\n"
     << "weight_energy = " << format_real(t.weights.energy) << "\n"
     << "weight_pitch = " << format_real(t.weights.pitch) << "\n"
     << "weight_mel = " << format_real(t.weights.mel) << "\n"
     << "save_every = " << t.save_every << "\n"
     << "k = " << t.context.k << "\n"
     << "use_prev = " << (t.context.use_prev ? "true" : "false") << "\n"
     << "use_fol = " << (t.context.use_fol ? "true" : "false") << "\n"
     << "no_cda_context = " << (t.ablation.no_cda_context ? "true" : "false") << "\n"
     << "no_cpp = " << (t.ablation.no_cpp ? "true" : "false") << "\n"
     << "no_cad_context = " << (t.ablation.no_cad_context ? "true" : "false") << "\n"
     << "two_stage = " << (t.two_stage ? "true" : "false") << "\n\n[eval]\n"
     << "k_list = ";
  for (size_t i = 0; i < c.k_list.size(); ++i) os << (i ? "," : "") << c.k_list[i];
  os << "\n";
  return os.str();
}

void RunConfig::finalize() {
  try {
    data::validate_shape(data.shape);
    data.frame = data::derive_frame_ratio(data.frame.sr, data.frame.hs, data.frame.fps);
  } catch (const Error& e) {
    throw ConfigError(std::string("[data]: ") + e.what());
  }
  model.frame_ratio = data.frame.n;
  model.vocab = data.shape.vocab;
  model.d_lip = data.shape.d_lip;
  model.d_face = data.shape.d_face;
  model.n_mels = data.shape.n_mels;
  model.resolved().validate();
  train.seed = seed;
  train.validate();
  if (data.single_count < 1 || data.train_count < 1 || data.valid_count < 1 || data.test_count < 1) {
    throw ConfigError("[data] sample counts must be >= 1");
  }
  if (k_list.empty()) throw ConfigError("eval.k_list is empty");
  for (int k : k_list) {
    if (k < 1) throw ConfigError("eval.k_list entries must be >= 1");
  }
  if (split != "train" && split != "valid" && split != "test" && split != "single") {
    throw ConfigError("split must be one of train, valid, test, single");
  }
}

RunConfig resolve_config(const CliOverrides& o) {
  std::string text;
  if (o.config_file) {
    std::ifstream in(*o.config_file);
    if (!in) throw ConfigError("cannot read config file " + o.config_file->string());
    std::ostringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
  std::string preset = "toy";
  if (auto p = preset_in(text)) preset = *p;
  if (o.preset) preset = *o.preset;

  RunConfig cfg = preset_config(preset);
  if (o.config_file) {
    // The file may name a different preset than --preset; the flag wins.
    std::string body;
    std::istringstream in(text);
    for (std::string raw; std::getline(in, raw);) {
      const std::string line = trim(raw.substr(0, raw.find('#')));
      const auto eq = line.find('=');
      if (eq != std::string::npos && trim(line.substr(0, eq)) == "preset") continue;
      body += raw + "\n";
    }
    apply_config_text(cfg, body);
  }
  for (const auto& s : o.settings) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects section.key=value, got '" + s + "'");
    const std::string lhs = trim(s.substr(0, eq));
    const auto dot = lhs.find('.');
    const std::string section = dot == std::string::npos ? std::string() : lhs.substr(0, dot);
    const std::string key = dot == std::string::npos ? lhs : lhs.substr(dot + 1);
    apply_setting(cfg, section, key, trim(s.substr(eq + 1)));
  }
  if (o.seed) cfg.seed = *o.seed;
  if (o.out) cfg.out = *o.out;
  if (o.data_dir) cfg.data_dir = *o.data_dir;
  if (o.k) cfg.train.context.k = *o.k;
  if (o.checkpoint) cfg.checkpoint = *o.checkpoint;
  if (o.split) cfg.split = *o.split;
  if (o.no_prev) cfg.train.context.use_prev = false;
  if (o.no_fol) cfg.train.context.use_fol = false;
  if (o.no_cpp) cfg.train.ablation.no_cpp = true;
  if (o.no_cda_context) cfg.train.ablation.no_cda_context = true;
  if (o.no_cad_context) cfg.train.ablation.no_cad_context = true;
  if (o.no_two_stage) cfg.train.two_stage = false;
  cfg.finalize();
  return cfg;
}

}  // namespace mcdub::cli
