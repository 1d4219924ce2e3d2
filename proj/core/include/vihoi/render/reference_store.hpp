#pragma once

#include <array>
#include <filesystem>

#include "vihoi/common/image.hpp"

namespace vihoi::render {

inline constexpr std::array<const char*, 3> kKeyframeFiles = {"keyframe_start.png", "keyframe_mid.png",
                                                               "keyframe_end.png"};

// Writes the three keyframe PNGs into `dir` (created if needed).
void write_reference_images(const std::filesystem::path& dir, const ImageTriple& images);
// Throws MissingReferenceImages if any of the three files is absent.
ImageTriple read_reference_images(const std::filesystem::path& dir);
bool has_reference_images(const std::filesystem::path& dir);

}  // namespace vihoi::render
