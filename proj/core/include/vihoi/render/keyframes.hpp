#pragma once

#include "vihoi/motion/motion_sequence.hpp"

namespace vihoi::render {

struct KeyframeTriple {
  int start = 0;
  int mid = 0;
  int end = 0;

  bool operator==(const KeyframeTriple&) const = default;
};

// Longest contiguous run of frames where either hand is in contact; ties go
// to the earlier run. Mid is the floor midpoint. Without any contact frame
// the result is (0, L/2, L-1). Throws InvalidArgument for L < 3.
KeyframeTriple select_keyframes(const motion::ContactLabels& contact);

}  // namespace vihoi::render
