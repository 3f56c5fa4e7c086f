#pragma once

#include "mcdub/ad/autodiff.hpp"
#include "mcdub/data/synthetic.hpp"
#include "mcdub/prosody_track.hpp"

#include <optional>
#include <vector>

namespace mcdub::eval {

// Relative pitch deviation above this fraction of the reference counts as a
// gross error. The comparison is strict.
inline constexpr double kGrossErrorFraction = 0.2;

enum class FrameClass : std::uint8_t {
  kBothUnvoiced,
  kBothVoiced,     // voiced in both, deviation within tolerance
  kPitchError,     // voiced in both, deviation above tolerance
  kVoicingError,   // voicing decisions disagree
};

struct PitchComparison {
  std::vector<FrameClass> frames;
  size_t both_voiced = 0;   // kBothVoiced + kPitchError
  size_t pitch_errors = 0;
  size_t voicing_errors = 0;

  size_t size() const { return frames.size(); }
};

// Throws LengthMismatch when the tracks differ in length or a track's voicing
// vector does not match its values.
PitchComparison compare_pitch(const ProsodyTrack& ref, const ProsodyTrack& hyp);

// Gross pitch error in percent. Throws NoVoicedOverlap when no frame is
// voiced in both tracks.
double gpe(const ProsodyTrack& ref, const ProsodyTrack& hyp);
double gpe(const PitchComparison& cmp);

// F0 frame error in percent. Throws EmptyTrack on zero-length input.
double ffe(const ProsodyTrack& ref, const ProsodyTrack& hyp);
double ffe(const PitchComparison& cmp);

// Decodes the pitch bin of a raw (denormalised) mel. Throws MissingPitchMap
// when no map is given and DimMismatch when the bin is out of range.
ProsodyTrack pitch_from_mel(const Matrix& mel, const std::optional<data::PitchMap>& map);

}  // namespace mcdub::eval
