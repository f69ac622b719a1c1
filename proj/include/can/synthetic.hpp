#pragma once

#include "can/image.hpp"
#include "can/rng.hpp"

namespace can {

// Procedural test scene: background gradient, random rectangles and
// ellipses, a sinusoidal shading field, optional uniform noise. Values
// stay in [0,1].
Image synth_image(int h, int w, Rng &rng, float noise_amp = 0.05f);

// Uniform noise in [0,1], 3 channels.
Image random_noise_image(int h, int w, Rng &rng);

} // namespace can
