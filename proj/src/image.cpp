#include "can/image.hpp"

#include <algorithm>
#include <cmath>

namespace can {

Image clamp01(const Image &img) {
  Image out = img;
  for (float &v : out.data) v = std::clamp(v, 0.0f, 1.0f);
  return out;
}

bool all_finite(const Image &img) {
  for (float v : img.data)
    if (!std::isfinite(v)) return false;
  return true;
}

} // namespace can
