#include "mcdub/data/corpus_io.hpp"

#include "mcdub/data/array_io.hpp"
#include "mcdub/errors.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

namespace mcdub::data {

namespace {

namespace fs = std::filesystem;

constexpr const char* kManifestName = "manifest.txt";
constexpr const char* kSegNames[3] = {"prev", "cur", "fol"};

std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  for (std::string tok; in >> tok;) out.push_back(tok);
  return out;
}

std::map<std::string, std::string> key_values(const std::vector<std::string>& tokens, size_t from) {
  std::map<std::string, std::string> kv;
  for (size_t i = from; i < tokens.size(); ++i) {
    const auto eq = tokens[i].find('=');
    if (eq == std::string::npos) throw FormatError("manifest: expected key=value, got '" + tokens[i] + "'");
    kv[tokens[i].substr(0, eq)] = tokens[i].substr(eq + 1);
  }
  return kv;
}

const std::string& need(const std::map<std::string, std::string>& kv, const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end()) throw FormatError("manifest: missing field '" + key + "'");
  return it->second;
}

int parse_int(const std::string& s) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) throw FormatError("manifest: bad integer '" + s + "'");
  return v;
}

int parse_count(const std::string& s) { return s == "-" ? -1 : parse_int(s); }

void save_bundle(const fs::path& dir, const char* seg, const SentenceBundle& b) {
  const std::string p = std::string(seg) + ".";
  save_array(dir / (p + "phonemes.arr"), from_ints(b.phonemes));
  save_array(dir / (p + "lip.arr"), from_matrix(b.lip_feats));
  save_array(dir / (p + "face.arr"), from_matrix(b.face_feats));
  save_array(dir / (p + "mel.arr"), from_matrix(b.mel));
  save_array(dir / (p + "voiced.arr"), from_flags(b.voiced));
  save_array(dir / (p + "pitch.arr"), from_doubles(b.pitch));
  save_array(dir / (p + "energy.arr"), from_doubles(b.energy));
}

SentenceBundle load_bundle(const fs::path& dir, const char* seg) {
  const std::string p = std::string(seg) + ".";
  SentenceBundle b;
  b.phonemes = to_ints(load_array(dir / (p + "phonemes.arr")));
  b.lip_feats = to_matrix(load_array(dir / (p + "lip.arr")));
  b.face_feats = to_matrix(load_array(dir / (p + "face.arr")));
  b.mel = to_matrix(load_array(dir / (p + "mel.arr")));
  b.voiced = to_flags(load_array(dir / (p + "voiced.arr")));
  b.pitch = to_doubles(load_array(dir / (p + "pitch.arr")));
  b.energy = to_doubles(load_array(dir / (p + "energy.arr")));
  return b;
}

std::string row_line(const char* key, const RowVector& v) {
  std::string line = key;
  for (Eigen::Index i = 0; i < v.size(); ++i) line += " " + format_real(v(i));
  return line;
}

RowVector parse_row(const std::vector<std::string>& tokens) {
  RowVector v(static_cast<Eigen::Index>(tokens.size()) - 1);
  for (size_t i = 1; i < tokens.size(); ++i) v(static_cast<Eigen::Index>(i) - 1) = parse_real(tokens[i]);
  return v;
}

}  // namespace

std::string format_real(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw FormatError("cannot format real");
  return std::string(buf, ptr);
}

double parse_real(const std::string& s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) throw FormatError("bad real number '" + s + "'");
  return v;
}

std::string format_manifest(const Manifest& m) {
  const CorpusInfo& ci = m.info;
  const ShapeConfig& s = ci.shape;
  std::ostringstream out;
  out << "mcdub-manifest 1\n";
  out << "seed " << ci.seed << "\n";
  out << "frame sr=" << ci.frame_cfg.sr << " hs=" << ci.frame_cfg.hs << " fps=" << ci.frame_cfg.fps
      << " n=" << ci.frame_cfg.n << "\n";
  out << "shape vocab=" << s.vocab << " d_lip=" << s.d_lip << " d_face=" << s.d_face << " n_mels=" << s.n_mels
      << " min_phonemes=" << s.min_phonemes << " max_phonemes=" << s.max_phonemes
      << " min_frames_per_phoneme=" << s.min_frames_per_phoneme
      << " max_frames_per_phoneme=" << s.max_frames_per_phoneme << " latent_dim=" << s.latent_dim
      << " with_context=" << (s.with_context ? 1 : 0) << " absent_context_prob=" << format_real(s.absent_context_prob)
      << "\n";
  const PitchMap& pm = ci.pitch_map;
  out << "pitch_map bin=" << pm.bin << " f0_min=" << format_real(pm.f0_min) << " f0_max=" << format_real(pm.f0_max)
      << " unvoiced_code=" << format_real(pm.unvoiced_code) << " threshold=" << format_real(pm.threshold) << "\n";
  const CorpusStats& st = ci.stats;
  out << "stats energy_mean=" << format_real(st.energy_mean) << " energy_std=" << format_real(st.energy_std)
      << " logf0_mean=" << format_real(st.logf0_mean) << " logf0_std=" << format_real(st.logf0_std) << "\n";
  out << row_line("mel_mean", st.mel_mean) << "\n";
  out << row_line("mel_std", st.mel_std) << "\n";
  out << "count " << m.entries.size() << "\n";
  auto count = [](int v) { return v < 0 ? std::string("-") : std::to_string(v); };
  for (const auto& e : m.entries) {
    out << "sample id=" << e.id << " dir=" << e.dir << " t_pre=" << count(e.t_pre) << " t_cur=" << e.t_cur
        << " t_fol=" << count(e.t_fol) << "\n";
  }
  return out.str();
}

Manifest parse_manifest(const std::string& text) {
  Manifest m;
  std::istringstream in(text);
  std::string line;
  int expected = -1;
  bool header = false;
  while (std::getline(in, line)) {
    const auto tokens = split_ws(line);
    if (tokens.empty() || tokens[0].starts_with('#')) continue;
    const std::string& key = tokens[0];
    if (key == "mcdub-manifest") {
      if (tokens.size() != 2 || tokens[1] != "1") throw FormatError("manifest: unsupported version");
      header = true;
    } else if (key == "seed") {
      m.info.seed = std::stoull(tokens.at(1));
    } else if (key == "frame") {
      const auto kv = key_values(tokens, 1);
      m.info.frame_cfg = {parse_int(need(kv, "sr")), parse_int(need(kv, "hs")), parse_int(need(kv, "fps")),
                          parse_int(need(kv, "n"))};
    } else if (key == "shape") {
      const auto kv = key_values(tokens, 1);
      ShapeConfig& s = m.info.shape;
      s.vocab = parse_int(need(kv, "vocab"));
      s.d_lip = parse_int(need(kv, "d_lip"));
      s.d_face = parse_int(need(kv, "d_face"));
      s.n_mels = parse_int(need(kv, "n_mels"));
      s.min_phonemes = parse_int(need(kv, "min_phonemes"));
      s.max_phonemes = parse_int(need(kv, "max_phonemes"));
      s.min_frames_per_phoneme = parse_int(need(kv, "min_frames_per_phoneme"));
      s.max_frames_per_phoneme = parse_int(need(kv, "max_frames_per_phoneme"));
      s.latent_dim = parse_int(need(kv, "latent_dim"));
      s.with_context = parse_int(need(kv, "with_context")) != 0;
      s.absent_context_prob = parse_real(need(kv, "absent_context_prob"));
    } else if (key == "pitch_map") {
      const auto kv = key_values(tokens, 1);
      PitchMap& pm = m.info.pitch_map;
      pm.bin = parse_int(need(kv, "bin"));
      pm.f0_min = parse_real(need(kv, "f0_min"));
      pm.f0_max = parse_real(need(kv, "f0_max"));
      pm.unvoiced_code = parse_real(need(kv, "unvoiced_code"));
      pm.threshold = parse_real(need(kv, "threshold"));
    } else if (key == "stats") {
      const auto kv = key_values(tokens, 1);
      CorpusStats& st = m.info.stats;
      st.energy_mean = parse_real(need(kv, "energy_mean"));
      st.energy_std = parse_real(need(kv, "energy_std"));
      st.logf0_mean = parse_real(need(kv, "logf0_mean"));
      st.logf0_std = parse_real(need(kv, "logf0_std"));
    } else if (key == "mel_mean") {
      m.info.stats.mel_mean = parse_row(tokens);
    } else if (key == "mel_std") {
      m.info.stats.mel_std = parse_row(tokens);
    } else if (key == "count") {
      expected = parse_int(tokens.at(1));
    } else if (key == "sample") {
      const auto kv = key_values(tokens, 1);
      m.entries.push_back({need(kv, "id"), need(kv, "dir"), parse_count(need(kv, "t_pre")),
                           parse_int(need(kv, "t_cur")), parse_count(need(kv, "t_fol"))});
    } else {
      throw FormatError("manifest: unknown record '" + key + "'");
    }
  }
  if (!header) throw FormatError("manifest: missing header line");
  if (expected != static_cast<int>(m.entries.size())) throw FormatError("manifest: sample count mismatch");
  if (m.info.stats.mel_mean.size() != m.info.shape.n_mels || m.info.stats.mel_std.size() != m.info.shape.n_mels) {
    throw FormatError("manifest: mel statistics do not match n_mels");
  }
  return m;
}

Manifest read_manifest(const fs::path& dir) {
  std::ifstream in(dir / kManifestName);
  if (!in) throw IoError("cannot open manifest in " + dir.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_manifest(buf.str());
}

void save_corpus(const fs::path& dir, const Corpus& corpus) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  Manifest manifest;
  manifest.info = corpus.info;
  for (const auto& s : corpus.samples) {
    const fs::path sdir = dir / s.id;
    fs::create_directories(sdir, ec);
    if (ec) throw IoError("cannot create " + sdir.string() + ": " + ec.message());
    if (s.previous) save_bundle(sdir, kSegNames[0], *s.previous);
    save_bundle(sdir, kSegNames[1], s.current);
    if (s.following) save_bundle(sdir, kSegNames[2], *s.following);
    manifest.entries.push_back({s.id, s.id, s.previous ? static_cast<int>(s.previous->phonemes.size()) : -1,
                                static_cast<int>(s.current.phonemes.size()),
                                s.following ? static_cast<int>(s.following->phonemes.size()) : -1});
  }
  std::ofstream out(dir / kManifestName, std::ios::trunc);
  if (!out) throw IoError("cannot write manifest in " + dir.string());
  out << format_manifest(manifest);
}

Corpus load_corpus(const fs::path& dir) {
  Manifest manifest = read_manifest(dir);
  Corpus corpus;
  corpus.info = manifest.info;
  for (const auto& e : manifest.entries) {
    const fs::path sdir = dir / e.dir;
    ContextSample s;
    s.id = e.id;
    s.frame_cfg = manifest.info.frame_cfg;
    if (e.t_pre >= 0) s.previous = load_bundle(sdir, kSegNames[0]);
    s.current = load_bundle(sdir, kSegNames[1]);
    if (e.t_fol >= 0) s.following = load_bundle(sdir, kSegNames[2]);
    const auto len = [](const std::optional<SentenceBundle>& b) {
      return b ? static_cast<int>(b->phonemes.size()) : -1;
    };
    if (len(s.previous) != e.t_pre || static_cast<int>(s.current.phonemes.size()) != e.t_cur ||
        len(s.following) != e.t_fol) {
      throw FormatError("sample " + e.id + ": lengths disagree with manifest");
    }
    corpus.samples.push_back(std::move(s));
  }
  return corpus;
}

}  // namespace mcdub::data
