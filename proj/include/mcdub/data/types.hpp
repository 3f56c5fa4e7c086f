#pragma once

#include "mcdub/ad/autodiff.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mcdub::data {

// Audio/video clock relation. n mel frames elapse per video frame, so a clip
// with T_v video frames has exactly n * T_v mel frames.
struct FrameRateConfig {
  int sr = 16000;
  int hs = 160;
  int fps = 25;
  int n = 4;

  bool operator==(const FrameRateConfig&) const = default;
};

// Throws NonIntegerRatio unless (sr / hs) / fps is a positive integer.
FrameRateConfig derive_frame_ratio(int sr, int hs, int fps);

// One sentence worth of aligned multimodal data.
struct SentenceBundle {
  std::vector<int> phonemes;
  Matrix lip_feats;   // T_v x D_lip
  Matrix face_feats;  // T_v x D_face
  Matrix mel;         // T_mel x n_mels, raw log-mel
  std::vector<std::uint8_t> voiced;  // T_mel
  std::vector<double> pitch;         // T_mel, Hz, 0 when unvoiced
  std::vector<double> energy;        // T_mel

  Eigen::Index phoneme_count() const { return static_cast<Eigen::Index>(phonemes.size()); }
  Eigen::Index video_frames() const { return lip_feats.rows(); }
  Eigen::Index mel_frames() const { return mel.rows(); }
};

struct ContextSample {
  std::string id;
  std::optional<SentenceBundle> previous;
  SentenceBundle current;
  std::optional<SentenceBundle> following;
  FrameRateConfig frame_cfg;
};

struct ContextConfig {
  int k = 50;
  bool use_prev = true;
  bool use_fol = true;
};

// Half-open index range.
struct Span {
  Eigen::Index begin = 0;
  Eigen::Index end = 0;
  Eigen::Index size() const { return end - begin; }
  bool empty() const { return end == begin; }
  bool operator==(const Span&) const = default;
};

enum Segment : int { kPrevious = 0, kCurrent = 1, kFollowing = 2 };

struct SegmentBounds {
  std::array<Span, 3> phoneme;
  std::array<Span, 3> video;
  std::array<Span, 3> mel;
};

// Concatenated {previous-selected, current, following-selected} sequences.
struct SelectedContext {
  std::vector<int> phoneme_seq;
  Matrix lip_seq;
  Matrix face_seq;
  Matrix mel_gt;
  std::vector<std::uint8_t> voiced;
  std::vector<double> pitch;
  std::vector<double> energy;
  SegmentBounds bounds;
  int n = 1;

  Eigen::Index video_frames() const { return lip_seq.rows(); }
  Eigen::Index mel_frames() const { return mel_gt.rows(); }
};

// Throws LengthMismatch / FormatError describing the first violated
// invariant of a bundle.
void validate_bundle(const SentenceBundle& bundle, const FrameRateConfig& frame_cfg);
void validate_sample(const ContextSample& sample);
void validate_selection(const SelectedContext& sel);

}  // namespace mcdub::data
