#include "mcdub/data/context.hpp"

#include "mcdub/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mcdub::data {

namespace {

// Rows [begin, begin + count) of one bundle, in every modality.
struct Slice {
  const SentenceBundle* bundle = nullptr;
  Eigen::Index pho_begin = 0, pho_count = 0;
  Eigen::Index vid_begin = 0, vid_count = 0;
};

Slice take_tail(const SentenceBundle& b, Eigen::Index k) {
  const Eigen::Index total = b.phoneme_count();
  const Eigen::Index keep = std::min(k, total);
  const Eigen::Index frames = proportional_frames(keep, total, b.video_frames());
  return {&b, total - keep, keep, b.video_frames() - frames, frames};
}

Slice take_head(const SentenceBundle& b, Eigen::Index k) {
  const Eigen::Index total = b.phoneme_count();
  const Eigen::Index keep = std::min(k, total);
  return {&b, 0, keep, 0, proportional_frames(keep, total, b.video_frames())};
}

Slice take_all(const SentenceBundle& b) { return {&b, 0, b.phoneme_count(), 0, b.video_frames()}; }

}  // namespace

FrameRateConfig derive_frame_ratio(int sr, int hs, int fps) {
  if (sr <= 0 || hs <= 0 || fps <= 0) {
    throw NonIntegerRatio("sample rate, hop size and fps must be positive");
  }
  // (sr / hs) / fps is a positive integer iff hs * fps divides sr.
  const long long denom = static_cast<long long>(hs) * fps;
  if (sr % denom != 0) {
    throw NonIntegerRatio("(" + std::to_string(sr) + "/" + std::to_string(hs) + ")/" + std::to_string(fps) +
                          " is not a positive integer");
  }
  return {sr, hs, fps, static_cast<int>(sr / denom)};
}

Eigen::Index proportional_frames(Eigen::Index selected, Eigen::Index total, Eigen::Index video_frames) {
  if (total <= 0 || selected <= 0) return 0;
  if (selected >= total) return video_frames;
  // round(selected / total * video_frames), halves up, in exact integer arithmetic
  const Eigen::Index frames = (2 * selected * video_frames + total) / (2 * total);
  return std::clamp<Eigen::Index>(frames, 0, video_frames);
}

SelectedContext select_context(const ContextSample& sample, const ContextConfig& cfg) {
  if (cfg.k < 1) throw ConfigError("context length K must be >= 1");
  const int n = sample.frame_cfg.n;

  std::array<Slice, 3> slices{};
  if (cfg.use_prev && sample.previous) slices[kPrevious] = take_tail(*sample.previous, cfg.k);
  slices[kCurrent] = take_all(sample.current);
  if (cfg.use_fol && sample.following) slices[kFollowing] = take_head(*sample.following, cfg.k);

  Eigen::Index total_pho = 0, total_vid = 0;
  for (const auto& s : slices) {
    total_pho += s.pho_count;
    total_vid += s.vid_count;
  }
  const Eigen::Index d_lip = sample.current.lip_feats.cols();
  const Eigen::Index d_face = sample.current.face_feats.cols();
  const Eigen::Index n_mels = sample.current.mel.cols();

  SelectedContext sel;
  sel.n = n;
  sel.phoneme_seq.reserve(static_cast<size_t>(total_pho));
  sel.lip_seq.resize(total_vid, d_lip);
  sel.face_seq.resize(total_vid, d_face);
  sel.mel_gt.resize(total_vid * n, n_mels);
  sel.voiced.reserve(static_cast<size_t>(total_vid * n));
  sel.pitch.reserve(static_cast<size_t>(total_vid * n));
  sel.energy.reserve(static_cast<size_t>(total_vid * n));

  Eigen::Index pho_at = 0, vid_at = 0;
  for (int seg = 0; seg < 3; ++seg) {
    const Slice& s = slices[static_cast<size_t>(seg)];
    sel.bounds.phoneme[static_cast<size_t>(seg)] = {pho_at, pho_at + s.pho_count};
    sel.bounds.video[static_cast<size_t>(seg)] = {vid_at, vid_at + s.vid_count};
    sel.bounds.mel[static_cast<size_t>(seg)] = {vid_at * n, (vid_at + s.vid_count) * n};
    if (s.bundle != nullptr) {
      const SentenceBundle& b = *s.bundle;
      if (b.lip_feats.cols() != d_lip || b.face_feats.cols() != d_face || b.mel.cols() != n_mels) {
        throw DimMismatch("context sentences disagree on feature dimensions");
      }
      const auto pho_first = b.phonemes.begin() + s.pho_begin;
      sel.phoneme_seq.insert(sel.phoneme_seq.end(), pho_first, pho_first + s.pho_count);
      sel.lip_seq.middleRows(vid_at, s.vid_count) = b.lip_feats.middleRows(s.vid_begin, s.vid_count);
      sel.face_seq.middleRows(vid_at, s.vid_count) = b.face_feats.middleRows(s.vid_begin, s.vid_count);
      const Eigen::Index mel_begin = s.vid_begin * n;
      const Eigen::Index mel_count = s.vid_count * n;
      sel.mel_gt.middleRows(vid_at * n, mel_count) = b.mel.middleRows(mel_begin, mel_count);
      const auto m0 = static_cast<size_t>(mel_begin);
      const auto m1 = static_cast<size_t>(mel_begin + mel_count);
      sel.voiced.insert(sel.voiced.end(), b.voiced.begin() + m0, b.voiced.begin() + m1);
      sel.pitch.insert(sel.pitch.end(), b.pitch.begin() + m0, b.pitch.begin() + m1);
      sel.energy.insert(sel.energy.end(), b.energy.begin() + m0, b.energy.begin() + m1);
    }
    pho_at += s.pho_count;
    vid_at += s.vid_count;
  }
  return sel;
}

Matrix build_masked_mel_context(const SelectedContext& sel) {
  Matrix masked = sel.mel_gt;
  const Span cur = sel.bounds.mel[kCurrent];
  masked.middleRows(cur.begin, cur.size()).setConstant(kMelMaskValue);
  return masked;
}

ContextSample current_only(const SelectedContext& sel, const FrameRateConfig& frame_cfg) {
  const Span pho = sel.bounds.phoneme[kCurrent];
  const Span vid = sel.bounds.video[kCurrent];
  const Span mel = sel.bounds.mel[kCurrent];
  ContextSample out;
  out.frame_cfg = frame_cfg;
  SentenceBundle& b = out.current;
  b.phonemes.assign(sel.phoneme_seq.begin() + pho.begin, sel.phoneme_seq.begin() + pho.end);
  b.lip_feats = sel.lip_seq.middleRows(vid.begin, vid.size());
  b.face_feats = sel.face_seq.middleRows(vid.begin, vid.size());
  b.mel = sel.mel_gt.middleRows(mel.begin, mel.size());
  b.voiced.assign(sel.voiced.begin() + mel.begin, sel.voiced.begin() + mel.end);
  b.pitch.assign(sel.pitch.begin() + mel.begin, sel.pitch.begin() + mel.end);
  b.energy.assign(sel.energy.begin() + mel.begin, sel.energy.begin() + mel.end);
  return out;
}

void validate_bundle(const SentenceBundle& b, const FrameRateConfig& frame_cfg) {
  const Eigen::Index t_v = b.video_frames();
  const Eigen::Index t_mel = b.mel_frames();
  if (b.phonemes.empty()) throw LengthMismatch("sentence has no phonemes");
  if (b.face_feats.rows() != t_v) throw LengthMismatch("face frames != lip frames");
  if (t_mel != frame_cfg.n * t_v) {
    throw LengthMismatch("T_mel=" + std::to_string(t_mel) + " != n*T_v=" + std::to_string(frame_cfg.n * t_v));
  }
  const auto len = static_cast<size_t>(t_mel);
  if (b.voiced.size() != len || b.pitch.size() != len || b.energy.size() != len) {
    throw LengthMismatch("prosody tracks must have T_mel entries");
  }
  if (!b.mel.allFinite() || !b.lip_feats.allFinite() || !b.face_feats.allFinite()) {
    throw FormatError("non-finite feature values");
  }
  for (size_t t = 0; t < len; ++t) {
    if ((b.pitch[t] > 0.0) != (b.voiced[t] != 0)) {
      throw FormatError("pitch/voicing disagree at mel frame " + std::to_string(t));
    }
    if (!(b.energy[t] >= 0.0) || !std::isfinite(b.energy[t]) || !std::isfinite(b.pitch[t])) {
      throw FormatError("invalid energy or pitch at mel frame " + std::to_string(t));
    }
  }
}

void validate_sample(const ContextSample& sample) {
  const FrameRateConfig& f = sample.frame_cfg;
  if (f.n < 1 || f.sr <= 0 || f.hs <= 0 || f.fps <= 0 || f.sr != f.n * f.hs * f.fps) {
    throw NonIntegerRatio("sample " + sample.id + " has inconsistent frame-rate config");
  }
  if (sample.previous) validate_bundle(*sample.previous, f);
  validate_bundle(sample.current, f);
  if (sample.following) validate_bundle(*sample.following, f);
}

void validate_selection(const SelectedContext& sel) {
  auto check_partition = [](const std::array<Span, 3>& spans, Eigen::Index total, const char* axis) {
    if (spans[0].begin != 0 || spans[2].end != total) {
      throw LengthMismatch(std::string(axis) + " segments do not cover the sequence");
    }
    for (int i = 0; i < 3; ++i) {
      if (spans[static_cast<size_t>(i)].end < spans[static_cast<size_t>(i)].begin) {
        throw LengthMismatch(std::string(axis) + " segment reversed");
      }
      if (i > 0 && spans[static_cast<size_t>(i)].begin != spans[static_cast<size_t>(i - 1)].end) {
        throw LengthMismatch(std::string(axis) + " segments have a gap or overlap");
      }
    }
  };
  check_partition(sel.bounds.phoneme, static_cast<Eigen::Index>(sel.phoneme_seq.size()), "phoneme");
  check_partition(sel.bounds.video, sel.video_frames(), "video");
  check_partition(sel.bounds.mel, sel.mel_frames(), "mel");
  if (sel.mel_frames() != sel.n * sel.video_frames()) throw LengthMismatch("selection violates T_mel = n*T_v");
  for (size_t i = 0; i < 3; ++i) {
    if (sel.bounds.mel[i].size() != sel.n * sel.bounds.video[i].size()) {
      throw LengthMismatch("segment violates T_mel = n*T_v");
    }
  }
  if (sel.face_seq.rows() != sel.video_frames()) throw LengthMismatch("face/lip frame counts differ");
}

}  // namespace mcdub::data
