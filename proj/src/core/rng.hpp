#pragma once

#include <cmath>
#include <cstdint>

namespace gm {

// PCG32 (XSH-RR 64/32, O'Neill 2014). Every randomized operation in the
// library draws from an instance seeded with (seed, stream); distinct
// streams give independent substreams of the same seed, which keeps
// per-anchor and per-iteration draws order-independent.
class Pcg32 {
 public:
  explicit Pcg32(uint64_t seed, uint64_t stream = 0) {
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

  // Unbiased integer in [0, bound) via rejection sampling.
  uint32_t next_below(uint32_t bound) {
    uint32_t threshold = (-bound) % bound;
    for (;;) {
      uint32_t r = next_u32();
      if (r >= threshold) return r % bound;
    }
  }

  // Uniform double in [0, 1) with 53 bits of precision.
  double next_double() {
    uint64_t hi = next_u32();
    uint64_t lo = next_u32();
    return static_cast<double>(((hi << 32u) | lo) >> 11u) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller (spare value discarded).
  double next_normal() {
    double u1 = 0.0;
    while (u1 <= 0.0) u1 = next_double();
    double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }

 private:
  static constexpr double kPi = 3.14159265358979323846;
  uint64_t state_;
  uint64_t inc_;
};

}  // namespace gm
