#pragma once

#include <cstdint>
#include <vector>

namespace mcdub {

// Per-mel-frame prosody scalar. For pitch tracks `values` is F0 in Hz (0 when
// unvoiced) and `voiced` carries the voicing decision; energy tracks leave
// `voiced` empty.
struct ProsodyTrack {
  std::vector<double> values;
  std::vector<std::uint8_t> voiced;

  size_t size() const { return values.size(); }
};

}  // namespace mcdub
