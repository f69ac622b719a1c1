#include "can/image_ops.hpp"

#include <algorithm>
#include <cmath>

namespace can {

Image resize_bilinear(const Image &img, int out_h, int out_w) {
  if (out_h < 1 || out_w < 1) fail(errc::bad_argument, "resize target must be >= 1");
  if (out_h == img.height && out_w == img.width) return img;

  Image out(out_h, out_w, img.channels);
  const double scale_y = static_cast<double>(img.height) / out_h;
  const double scale_x = static_cast<double>(img.width) / out_w;
  const int c = img.channels;

  for (int y = 0; y < out_h; ++y) {
    double sy = (y + 0.5) * scale_y - 0.5;
    sy = std::clamp(sy, 0.0, static_cast<double>(img.height - 1));
    const int y0 = static_cast<int>(sy);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double fy = sy - y0;
    for (int x = 0; x < out_w; ++x) {
      double sx = (x + 0.5) * scale_x - 0.5;
      sx = std::clamp(sx, 0.0, static_cast<double>(img.width - 1));
      const int x0 = static_cast<int>(sx);
      const int x1 = std::min(x0 + 1, img.width - 1);
      const double fx = sx - x0;
      for (int ch = 0; ch < c; ++ch) {
        const double top = (1.0 - fx) * img.at(y0, x0, ch) + fx * img.at(y0, x1, ch);
        const double bot = (1.0 - fx) * img.at(y1, x0, ch) + fx * img.at(y1, x1, ch);
        out.at(y, x, ch) = static_cast<float>((1.0 - fy) * top + fy * bot);
      }
    }
  }
  return out;
}

int width_for_height(int src_h, int src_w, int target_h) {
  const double aspect = static_cast<double>(src_w) / src_h;
  const int w = static_cast<int>(std::lround(target_h * aspect));
  return std::max(1, w);
}

Image random_resize(const Image &img, int min_h, int max_h, Rng &rng) {
  if (min_h < 1 || min_h > max_h) fail(errc::bad_argument, "bad resize bounds");
  const int h = rng.uniform_int(min_h, max_h);
  return resize_bilinear(img, h, width_for_height(img.height, img.width, h));
}

Image to_gray(const Image &img) {
  if (img.channels == 1) return img;
  if (img.channels != 3) fail(errc::bad_argument, "to_gray expects 1 or 3 channels");
  Image out(img.height, img.width, 1);
  const float *src = img.data.data();
  for (size_t p = 0; p < out.pixel_count(); ++p, src += 3)
    out.data[p] = 0.299f * src[0] + 0.587f * src[1] + 0.114f * src[2];
  return out;
}

} // namespace can
