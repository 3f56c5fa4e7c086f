#pragma once

#include "mcdub/data/types.hpp"

namespace mcdub::data {

// Fill value for the current-sentence rows of the masked mel context, in
// normalised log-mel space.
inline constexpr double kMelMaskValue = 0.0;

// Concatenates the last min(K, T_pre) phonemes of the previous sentence, the
// whole current sentence and the first min(K, T_fol) phonemes of the
// following sentence. Video frames of a partially selected context sentence
// are taken proportionally (round(fraction * T_v)) from the adjacent edge,
// and the mel slice is always n times the video slice. Absent or disabled
// contexts give empty segments.
SelectedContext select_context(const ContextSample& sample, const ContextConfig& cfg);

// Number of video frames kept when `selected` of `total` phonemes are taken
// from a sentence with `video_frames` frames.
Eigen::Index proportional_frames(Eigen::Index selected, Eigen::Index total, Eigen::Index video_frames);

// {M_pre, MASK, M_fol}: a copy of sel.mel_gt whose current-segment rows are
// kMelMaskValue.
Matrix build_masked_mel_context(const SelectedContext& sel);

// The current-sentence part of a selection as a context-free sample.
ContextSample current_only(const SelectedContext& sel, const FrameRateConfig& frame_cfg);

}  // namespace mcdub::data
