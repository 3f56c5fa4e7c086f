#include "mcdub/eval/metrics.hpp"

#include "mcdub/errors.hpp"

#include <cmath>
#include <string>

namespace mcdub::eval {

namespace {

void check_track(const ProsodyTrack& t, const char* name) {
  if (t.voiced.size() != t.values.size()) {
    throw LengthMismatch(std::string(name) + " track: voicing length differs from pitch length");
  }
}

}  // namespace

PitchComparison compare_pitch(const ProsodyTrack& ref, const ProsodyTrack& hyp) {
  check_track(ref, "reference");
  check_track(hyp, "hypothesis");
  if (ref.size() != hyp.size()) {
    throw LengthMismatch("pitch tracks differ in length: " + std::to_string(ref.size()) + " vs " +
                         std::to_string(hyp.size()));
  }
  PitchComparison cmp;
  cmp.frames.reserve(ref.size());
  for (size_t t = 0; t < ref.size(); ++t) {
    const bool rv = ref.voiced[t] != 0;
    const bool hv = hyp.voiced[t] != 0;
    FrameClass c;
    if (rv != hv) {
      c = FrameClass::kVoicingError;
      ++cmp.voicing_errors;
    } else if (!rv) {
      c = FrameClass::kBothUnvoiced;
    } else {
      ++cmp.both_voiced;
      const double rel = std::abs(hyp.values[t] - ref.values[t]) / ref.values[t];
      if (rel > kGrossErrorFraction) {
        c = FrameClass::kPitchError;
        ++cmp.pitch_errors;
      } else {
        c = FrameClass::kBothVoiced;
      }
    }
    cmp.frames.push_back(c);
  }
  return cmp;
}

double gpe(const PitchComparison& cmp) {
  if (cmp.both_voiced == 0) throw NoVoicedOverlap("no frame is voiced in both tracks");
  return 100.0 * static_cast<double>(cmp.pitch_errors) / static_cast<double>(cmp.both_voiced);
}

double gpe(const ProsodyTrack& ref, const ProsodyTrack& hyp) { return gpe(compare_pitch(ref, hyp)); }

double ffe(const PitchComparison& cmp) {
  if (cmp.size() == 0) throw EmptyTrack("F0 frame error of an empty track");
  return 100.0 * static_cast<double>(cmp.voicing_errors + cmp.pitch_errors) / static_cast<double>(cmp.size());
}

double ffe(const ProsodyTrack& ref, const ProsodyTrack& hyp) { return ffe(compare_pitch(ref, hyp)); }

ProsodyTrack pitch_from_mel(const Matrix& mel, const std::optional<data::PitchMap>& map) {
  if (!map) throw MissingPitchMap("corpus carries no pitch map");
  if (map->bin < 0 || map->bin >= mel.cols()) {
    throw DimMismatch("pitch bin " + std::to_string(map->bin) + " outside mel width " + std::to_string(mel.cols()));
  }
  ProsodyTrack out;
  out.values.resize(static_cast<size_t>(mel.rows()));
  out.voiced.resize(static_cast<size_t>(mel.rows()));
  for (Eigen::Index t = 0; t < mel.rows(); ++t) {
    const double f0 = map->decode(mel(t, map->bin));
    out.values[static_cast<size_t>(t)] = f0;
    out.voiced[static_cast<size_t>(t)] = f0 > 0.0 ? 1 : 0;
  }
  return out;
}

}  // namespace mcdub::eval
