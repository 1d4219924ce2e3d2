#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "vihoi/common/io.hpp"

namespace vihoi {

// H×W×3 RGB image, row-major, channel-last, values in [0, 1].
struct Image {
  int height = 0;
  int width = 0;
  std::vector<float> pixels;

  Image() = default;
  Image(int h, int w, float fill = 0.0f) : height(h), width(w), pixels(static_cast<std::size_t>(h) * w * 3, fill) {}

  float& at(int y, int x, int c) { return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
  float at(int y, int x, int c) const { return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }

  bool operator==(const Image&) const = default;
};

using ImageTriple = std::array<Image, 3>;

io::Bytes encode_png(const Image& image);
Image decode_png(std::span<const std::uint8_t> bytes);

Image resize_bilinear(const Image& image, int height, int width);

// Quantizes to the 8-bit grid PNG stores, so that images compare equal
// after a PNG round trip.
Image quantize8(const Image& image);

}  // namespace vihoi
