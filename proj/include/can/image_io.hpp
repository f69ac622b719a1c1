#pragma once

#include <string>

#include "can/image.hpp"

namespace can {

// 8-bit grayscale or RGB PNG only; alpha, palette and 16-bit files are
// rejected. Sample v in {0..255} maps to v/255.
Image load_image(const std::string &path);

// Clamps to [0,1], quantizes round-half-up to 8 bits, writes PNG.
void save_image(const Image &img, const std::string &path);

} // namespace can
