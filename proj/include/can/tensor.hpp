#pragma once

#include <cstddef>
#include <vector>

#include "can/image.hpp"

namespace can {

// Activation buffer: like Image but with an arbitrary channel count.
struct Tensor {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<float> data;

  Tensor() = default;
  Tensor(int h, int w, int c, float fill = 0.0f)
      : height(h), width(w), channels(c),
        data(static_cast<size_t>(h) * w * c, fill) {}

  float &at(int y, int x, int c) { return data[(static_cast<size_t>(y) * width + x) * channels + c]; }
  float at(int y, int x, int c) const { return data[(static_cast<size_t>(y) * width + x) * channels + c]; }
  const float *row(int y) const { return data.data() + static_cast<size_t>(y) * width * channels; }
  float *row(int y) { return data.data() + static_cast<size_t>(y) * width * channels; }
  size_t size() const { return data.size(); }
};

inline Tensor to_tensor(const Image &img) {
  Tensor t(img.height, img.width, img.channels);
  t.data = img.data;
  return t;
}

inline Image to_image(const Tensor &t) {
  Image img(t.height, t.width, t.channels);
  img.data = t.data;
  return img;
}

} // namespace can
