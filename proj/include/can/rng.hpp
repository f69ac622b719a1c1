#pragma once

#include <cmath>
#include <cstdint>

namespace can {

// PCG32 (O'Neill). Self-contained so that seeded streams are identical
// across compilers and standard libraries.
class Rng {
public:
  explicit Rng(uint64_t seed, uint64_t stream = 0) {
    state_ = 0u;
    inc_ = (stream << 1u) | 1u;
    next_u32();
    state_ += seed;
    next_u32();
  }

  uint32_t next_u32() {
    uint64_t old = state_;
    state_ = old * 6364136223846793005ULL + inc_;
    uint32_t xorshifted = static_cast<uint32_t>(((old >> 18u) ^ old) >> 27u);
    uint32_t rot = static_cast<uint32_t>(old >> 59u);
    return (xorshifted >> rot) | (xorshifted << ((-rot) & 31u));
  }

  // [0,1)
  double uniform() { return next_u32() * 0x1p-32; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // inclusive bounds, unbiased via rejection
  int uniform_int(int lo, int hi) {
    uint32_t range = static_cast<uint32_t>(hi - lo) + 1u;
    if (range == 0) return lo + static_cast<int>(next_u32()); // full 32-bit span
    uint32_t threshold = (-range) % range;
    uint32_t r;
    do {
      r = next_u32();
    } while (r < threshold);
    return lo + static_cast<int>(r % range);
  }

  // Box-Muller; consumes exactly two draws per call
  double gaussian(double mean = 0.0, double stddev = 1.0) {
    double u1 = (next_u32() + 1.0) * 0x1p-32; // (0,1]
    double u2 = next_u32() * 0x1p-32;
    double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    return mean + stddev * z;
  }

private:
  uint64_t state_;
  uint64_t inc_;
};

} // namespace can
