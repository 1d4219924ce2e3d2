#include "vihoi/render/reference_store.hpp"

#include "vihoi/common/error.hpp"
#include "vihoi/common/io.hpp"

namespace vihoi::render {

void write_reference_images(const std::filesystem::path& dir, const ImageTriple& images) {
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < 3; ++i) io::write_file_atomic(dir / kKeyframeFiles[i], encode_png(images[i]));
}

ImageTriple read_reference_images(const std::filesystem::path& dir) {
  ImageTriple out;
  for (std::size_t i = 0; i < 3; ++i) {
    const auto path = dir / kKeyframeFiles[i];
    if (!std::filesystem::exists(path)) {
      fail(ErrorCode::kMissingReferenceImages, "missing reference image " + path.string());
    }
    out[i] = decode_png(io::read_file(path));
  }
  return out;
}

bool has_reference_images(const std::filesystem::path& dir) {
  for (const char* name : kKeyframeFiles)
    if (!std::filesystem::exists(dir / name)) return false;
  return true;
}

}  // namespace vihoi::render
