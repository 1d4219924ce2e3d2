#pragma once

#include <cstdint>
#include <vector>

#include "vihoi/priors/encoder.hpp"

namespace vihoi::priors {

// Rendered keyframe triples of freshly generated toy interactions paired with
// their annotations, cycling through the verbs.
std::vector<CaptionedImages> make_warmup_pairs(int n, std::uint64_t seed, int image_size);

}  // namespace vihoi::priors
