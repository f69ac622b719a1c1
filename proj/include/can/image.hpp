#pragma once

#include <cstddef>
#include <vector>

#include "can/error.hpp"

namespace can {

// Row-major, channel-interleaved float32 samples, nominal range [0,1].
// Intermediate values may leave [0,1]; clamping happens at save/metric time.
struct Image {
  int height = 0;
  int width = 0;
  int channels = 0; // 1 or 3 for anything that touches disk
  std::vector<float> data;

  Image() = default;
  Image(int h, int w, int c, float fill = 0.0f)
      : height(h), width(w), channels(c),
        data(static_cast<size_t>(h) * w * c, fill) {
    if (h < 1 || w < 1 || c < 1) fail(errc::bad_argument, "image dimensions must be >= 1");
  }

  float &at(int y, int x, int c) { return data[(static_cast<size_t>(y) * width + x) * channels + c]; }
  float at(int y, int x, int c) const { return data[(static_cast<size_t>(y) * width + x) * channels + c]; }
  const float *row(int y) const { return data.data() + static_cast<size_t>(y) * width * channels; }
  float *row(int y) { return data.data() + static_cast<size_t>(y) * width * channels; }

  size_t sample_count() const { return data.size(); }
  size_t pixel_count() const { return static_cast<size_t>(height) * width; }
  bool same_shape(const Image &o) const {
    return height == o.height && width == o.width && channels == o.channels;
  }
};

Image clamp01(const Image &img);
bool all_finite(const Image &img);

} // namespace can
