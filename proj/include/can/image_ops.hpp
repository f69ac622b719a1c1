#pragma once

#include "can/image.hpp"
#include "can/rng.hpp"

namespace can {

// Bilinear, half-pixel-center convention: src = (dst + 0.5) * scale - 0.5,
// clamped to the borders.
Image resize_bilinear(const Image &img, int out_h, int out_w);

// Target height uniform in [min_h, max_h]; width tracks the aspect ratio.
Image random_resize(const Image &img, int min_h, int max_h, Rng &rng);

// Width for a given height under the same rounding random_resize uses.
int width_for_height(int src_h, int src_w, int target_h);

// BT.601 luma; 1-channel input passes through.
Image to_gray(const Image &img);

} // namespace can
