#include "can/synthetic.hpp"

#include <algorithm>
#include <cmath>

namespace can {

Image synth_image(int h, int w, Rng &rng, float noise_amp) {
  Image img(h, w, 3);

  // background: linear gradient between two colors
  float c0[3], c1[3];
  for (int c = 0; c < 3; ++c) {
    c0[c] = static_cast<float>(rng.uniform(0.1, 0.9));
    c1[c] = static_cast<float>(rng.uniform(0.1, 0.9));
  }
  const double angle = rng.uniform(0.0, 2.0 * M_PI);
  const double dx = std::cos(angle), dy = std::sin(angle);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double t = 0.5 + 0.5 * ((x - w / 2.0) * dx + (y - h / 2.0) * dy) /
                                 (0.5 * std::sqrt(static_cast<double>(h) * h + static_cast<double>(w) * w));
      for (int c = 0; c < 3; ++c)
        img.at(y, x, c) = static_cast<float>((1.0 - t) * c0[c] + t * c1[c]);
    }

  // flat-colored rectangles and ellipses
  const int shapes = rng.uniform_int(4, 10);
  for (int s = 0; s < shapes; ++s) {
    float col[3];
    for (int c = 0; c < 3; ++c) col[c] = static_cast<float>(rng.uniform(0.0, 1.0));
    const bool ellipse = rng.uniform() < 0.5;
    const int cy = rng.uniform_int(0, h - 1);
    const int cx = rng.uniform_int(0, w - 1);
    const int ry = rng.uniform_int(h / 16 + 1, h / 4 + 1);
    const int rx = rng.uniform_int(w / 16 + 1, w / 4 + 1);
    for (int y = std::max(0, cy - ry); y <= std::min(h - 1, cy + ry); ++y)
      for (int x = std::max(0, cx - rx); x <= std::min(w - 1, cx + rx); ++x) {
        if (ellipse) {
          const double u = static_cast<double>(y - cy) / ry;
          const double v = static_cast<double>(x - cx) / rx;
          if (u * u + v * v > 1.0) continue;
        }
        for (int c = 0; c < 3; ++c) img.at(y, x, c) = col[c];
      }
  }

  // gentle sinusoidal shading so flat regions are not perfectly flat
  const double fy = rng.uniform(1.0, 4.0) * 2.0 * M_PI / h;
  const double fx = rng.uniform(1.0, 4.0) * 2.0 * M_PI / w;
  const double amp = rng.uniform(0.02, 0.08);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const float shade = static_cast<float>(amp * std::sin(fy * y) * std::sin(fx * x));
      for (int c = 0; c < 3; ++c) img.at(y, x, c) += shade;
    }

  if (noise_amp > 0) {
    for (float &v : img.data)
      v += static_cast<float>(rng.uniform(-noise_amp, noise_amp));
  }
  for (float &v : img.data) v = std::clamp(v, 0.0f, 1.0f);
  return img;
}

Image random_noise_image(int h, int w, Rng &rng) {
  Image img(h, w, 3);
  for (float &v : img.data) v = static_cast<float>(rng.uniform());
  return img;
}

} // namespace can
