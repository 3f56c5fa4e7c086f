#pragma once

// Run configuration. Files are line oriented:
//
//   # comment
//   preset = toy
//   [data]
//   train_count = 64
//   [model]
//   dim = 16
//   [train]
//   lr = 2e-4
//   [eval]
//   k_list = 10,20,30
//
// Resolution order, later wins: preset defaults, config file, command-line
// flags. The preset is taken from --preset, else from the file's top-level
// "preset" key, else "toy".

#include "mcdub/data/synthetic.hpp"
#include "mcdub/model_config.hpp"
#include "mcdub/training/trainer.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mcdub::cli {

struct DataSettings {
  int single_count = 64;
  int train_count = 64;
  int valid_count = 16;
  int test_count = 16;
  data::FrameRateConfig frame;
  data::ShapeConfig shape;
};

struct RunConfig {
  std::string preset = "toy";
  std::uint64_t seed = 1;
  std::filesystem::path out = "run";
  std::filesystem::path data_dir;    // empty: <out>/data
  std::filesystem::path checkpoint;  // empty: command default
  std::string split = "test";
  DataSettings data;
  ModelConfig model;
  training::TrainConfig train;
  std::vector<int> k_list{10, 20, 30, 40, 50, 60};

  std::filesystem::path corpus_root() const { return data_dir.empty() ? out / "data" : data_dir; }
  // Copies seed and data-facing dimensions into the model and train
  // sections and validates everything. Throws ConfigError.
  void finalize();
};

// Throws ConfigError for names other than "toy" and "paper".
RunConfig preset_config(const std::string& name);

// Applies "section.key=value" (or "key=value" for top-level keys). Throws
// ConfigError on unknown keys or malformed values.
void apply_setting(RunConfig& cfg, const std::string& section, const std::string& key, const std::string& value);
void apply_config_text(RunConfig& cfg, const std::string& text);
// Top-level "preset" key of a config file, if any.
std::optional<std::string> preset_in(const std::string& text);

// Canonical text accepted by apply_config_text.
std::string format_config(const RunConfig& cfg);

struct CliOverrides {
  std::optional<std::string> preset;
  std::optional<std::filesystem::path> config_file;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  std::optional<std::filesystem::path> data_dir;
  std::optional<int> k;
  std::optional<std::filesystem::path> checkpoint;
  std::optional<std::string> split;
  bool no_prev = false;
  bool no_fol = false;
  bool no_cpp = false;
  bool no_cda_context = false;
  bool no_cad_context = false;
  bool no_two_stage = false;
  std::vector<std::string> settings;  // "section.key=value"
};

RunConfig resolve_config(const CliOverrides& o);

}  // namespace mcdub::cli
