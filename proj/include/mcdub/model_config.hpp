#pragma once

#include <string>

namespace mcdub {

// Architecture hyperparameters. Zero-valued "derived" fields resolve from
// other fields (see resolved()).
struct ModelConfig {
  // data-facing dimensions
  int vocab = 32;
  int d_lip = 16;
  int d_face = 8;
  int n_mels = 80;
  int frame_ratio = 4;  // n, mel frames per video frame

  // FFT stacks
  int dim = 16;
  int heads = 2;
  int ffn_dim = 32;
  int ffn_kernel_first = 9;
  int ffn_kernel_second = 1;
  int text_blocks = 1;
  int lip_blocks = 1;
  int decoder_blocks = 1;
  double dropout = 0.0;

  // text-video aligner
  int aligner_heads = 2;
  int upsample_kernel = 0;  // 0 -> 2n

  // prosody predictors
  int predictor_channels = 0;  // 0 -> dim
  int predictor_kernel = 3;
  double predictor_dropout = 0.0;

  // double attention block
  int dab_descriptors = 32;
  int dab_dim = 0;  // 0 -> dim

  // postnet
  int postnet_channels = 32;
  int postnet_kernel = 5;
  int postnet_layers = 5;

  ModelConfig resolved() const;
  // Throws ConfigError on inconsistent values.
  void validate() const;

  // Canonical key=value text, one per line, used for checkpoint snapshots.
  std::string to_text() const;
  static ModelConfig from_text(const std::string& text);
  // Applies one key=value; returns false for unknown keys.
  bool set(const std::string& key, const std::string& value);

  static ModelConfig toy();
  // Published dimensions: D = 256, 6 FFT blocks per stack, 8 aligner heads.
  static ModelConfig paper();

  bool operator==(const ModelConfig&) const = default;
};

// FNV-1a 64-bit digest of a text blob.
unsigned long long fnv1a64(const std::string& text);

}  // namespace mcdub
