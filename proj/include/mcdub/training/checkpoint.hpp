#pragma once

// Versioned checkpoint container:
//
//   magic "MCDCKPT\0" (8 bytes)
//   u32 format version, u32 stage, u64 step, u64 config digest
//   string model config text, string train config text
//   u64 optimizer step count, u32 parameter count
//   per parameter: string name, array record (value), u8 has_moments,
//                  [array record (first moment), array record (second moment)]
//
// Integers are little-endian, strings are u32 length + bytes, array records
// use the .arr layout from data/array_io.hpp. The digest is FNV-1a 64 of the
// model config text.

#include "mcdub/model.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace mcdub::training {

class Adam;

struct NamedArray {
  std::string name;
  Matrix value;
};

struct Checkpoint {
  static constexpr std::uint32_t kFormatVersion = 1;

  std::uint32_t version = kFormatVersion;
  int stage = 1;
  std::uint64_t step = 0;
  std::uint64_t config_digest = 0;
  std::string model_config;
  std::string train_config;
  std::uint64_t optimizer_step = 0;
  std::vector<NamedArray> params;
  // Same order as params when present; empty when no optimizer was captured.
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;
};

Checkpoint capture(const DubbingModel& model, const Adam* optimizer, int stage, std::uint64_t step,
                   const std::string& train_config);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
// Throws IncompatibleCheckpoint on a bad magic, version or digest.
Checkpoint load_checkpoint(const std::filesystem::path& path);

struct LoadReport {
  std::vector<std::string> missing;     // in the model, not in the checkpoint
  std::vector<std::string> unexpected;  // in the checkpoint, not in the model
  std::vector<std::string> mismatched;  // present in both with different shapes

  bool clean() const { return missing.empty() && unexpected.empty() && mismatched.empty(); }
};

// Copies matching parameters into the model. With strict set, any missing,
// unexpected or mismatched entry throws IncompatibleCheckpoint and the model
// is left untouched.
LoadReport load_parameters(DubbingModel& model, const Checkpoint& ckpt, bool strict = true);

}  // namespace mcdub::training
