#pragma once

#include <stdexcept>
#include <string>

namespace mcdub {

// Base of every error the library throws. Callers that only need a message
// can catch this; the CLI maps concrete types to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define MCDUB_DEFINE_ERROR(Name)          \
  class Name : public Error {             \
   public:                                \
    using Error::Error;                   \
  }

MCDUB_DEFINE_ERROR(NonIntegerRatio);
MCDUB_DEFINE_ERROR(InvalidShapeConfig);
MCDUB_DEFINE_ERROR(UnknownPhonemeId);
MCDUB_DEFINE_ERROR(DimMismatch);
MCDUB_DEFINE_ERROR(BoundsOutOfRange);
MCDUB_DEFINE_ERROR(LengthMismatch);
MCDUB_DEFINE_ERROR(DivergenceDetected);
MCDUB_DEFINE_ERROR(IncompatibleCheckpoint);
MCDUB_DEFINE_ERROR(NoVoicedOverlap);
MCDUB_DEFINE_ERROR(EmptyTrack);
MCDUB_DEFINE_ERROR(MissingPitchMap);
MCDUB_DEFINE_ERROR(FormatError);
MCDUB_DEFINE_ERROR(IoError);
MCDUB_DEFINE_ERROR(ConfigError);

#undef MCDUB_DEFINE_ERROR

}  // namespace mcdub
