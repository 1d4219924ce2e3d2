#include "vihoi/render/keyframes.hpp"

#include "vihoi/common/error.hpp"

namespace vihoi::render {

KeyframeTriple select_keyframes(const motion::ContactLabels& contact) {
  const int L = static_cast<int>(contact.size());
  if (L < 3) fail(ErrorCode::kInvalidArgument, "keyframe selection needs at least 3 frames");
  int best_start = -1, best_len = 0;
  for (int f = 0; f < L;) {
    if (!(contact[f][0] || contact[f][1])) {
      ++f;
      continue;
    }
    const int start = f;
    while (f < L && (contact[f][0] || contact[f][1])) ++f;
    if (f - start > best_len) {
      best_len = f - start;
      best_start = start;
    }
  }
  if (best_start < 0) return {0, L / 2, L - 1};
  const int end = best_start + best_len - 1;
  return {best_start, (best_start + end) / 2, end};
}

}  // namespace vihoi::render
