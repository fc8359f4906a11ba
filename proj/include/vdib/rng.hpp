#pragma once

#include <cmath>
#include <cstdint>

#include "vdib/check.hpp"

namespace vdib {

// PCG32 generator (www.pcg-random.org, pcg_setseq_64_xsh_rr_32) with
// independent substreams selected by stream_id. Identical (seed, stream_id)
// reproduce the same draw sequence on every platform; distinct stream_ids
// select distinct LCG increments and are statistically independent.
//
// Single-owner mutable state: one instance per worker, never shared.
class Rng {
 public:
  explicit Rng(uint64_t seed, uint64_t stream_id = 0) {
    inc_ = (stream_id << 1u) | 1u;
    state_ = 0u;
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

  // Uniform double in [0, 1) with 53 random bits.
  double uniform01() {
    uint64_t a = next_u32() >> 5;   // 27 bits
    uint64_t b = next_u32() >> 6;   // 26 bits
    return (static_cast<double>(a) * 67108864.0 + static_cast<double>(b)) *
           (1.0 / 9007199254740992.0);
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Unbiased integer in [0, n) by rejection.
  uint32_t uniform_below(uint32_t n) {
    VDIB_CHECK(n > 0);
    uint32_t threshold = (-n) % n;
    for (;;) {
      uint32_t r = next_u32();
      if (r >= threshold) return r % n;
    }
  }

  // Standard normal via the Marsaglia polar method; the spare deviate is
  // cached, so draws consume a deterministic amount of generator state.
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform01() - 1.0;
      v = 2.0 * uniform01() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    has_spare_ = true;
    return u * m;
  }

  // Returns 1 with probability prob. prob must lie in [0, 1].
  int bernoulli(double prob) {
    VDIB_CHECK(prob >= 0.0 && prob <= 1.0, "bernoulli probability");
    return uniform01() < prob ? 1 : 0;
  }

 private:
  uint64_t state_ = 0;
  uint64_t inc_ = 1;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace vdib
