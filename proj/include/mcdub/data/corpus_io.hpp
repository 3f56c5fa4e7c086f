#pragma once

// On-disk corpus layout:
//
//   <dir>/manifest.txt           corpus-level description (see below)
//   <dir>/<sample-id>/<seg>.<field>.arr
//
// where seg is prev|cur|fol and field is phonemes|lip|face|mel|voiced|pitch|
// energy. Absent context sentences have no files.
//
// The manifest is line oriented, one record per line, "key" followed by
// space-separated tokens; key=value tokens are order-independent:
//
//   mcdub-manifest 1
//   seed 7
//   frame sr=16000 hs=160 fps=25 n=4
//   shape vocab=32 d_lip=16 ... absent_context_prob=0
//   pitch_map bin=0 f0_min=60 f0_max=400 unvoiced_code=-1 threshold=0
//   stats energy_mean=.. energy_std=.. logf0_mean=.. logf0_std=..
//   mel_mean v0 v1 ... v{n_mels-1}
//   mel_std  v0 v1 ...
//   count 3
//   sample id=s0 dir=s0 t_pre=43 t_cur=20 t_fol=-
//
// t_pre / t_fol are phoneme counts, "-" when the sentence is absent. Reals
// are written in shortest round-trip form so statistics reload bit-exactly.

#include "mcdub/data/synthetic.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace mcdub::data {

struct ManifestEntry {
  std::string id;
  std::string dir;
  int t_pre = -1;  // -1 when absent
  int t_cur = 0;
  int t_fol = -1;
};

struct Manifest {
  CorpusInfo info;
  std::vector<ManifestEntry> entries;
};

void save_corpus(const std::filesystem::path& dir, const Corpus& corpus);
Corpus load_corpus(const std::filesystem::path& dir);

std::string format_manifest(const Manifest& manifest);
Manifest parse_manifest(const std::string& text);
Manifest read_manifest(const std::filesystem::path& dir);

// Shortest round-trip decimal form of a double.
std::string format_real(double v);
double parse_real(const std::string& s);

}  // namespace mcdub::data
