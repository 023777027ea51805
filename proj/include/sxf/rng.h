// Copyright Contributors to the sxf Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>

namespace sxf {

// Seeded RNG with a portable float path. std::uniform_real_distribution is
// implementation-defined, so floats are derived from raw mt19937 draws; the
// stream of values depends only on (seed, stream).
class Rng {
 public:
  explicit Rng(uint64_t seed, uint64_t stream = 0) {
    std::seed_seq seq{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32),
                      static_cast<uint32_t>(stream), static_cast<uint32_t>(stream >> 32)};
    gen_.seed(seq);
  }

  uint32_t next_u32() { return gen_(); }

  // Uniform in [0, 1) with 24 bits of mantissa.
  float uniform() { return static_cast<float>(gen_() >> 8) * (1.0f / 16777216.0f); }

  float uniform(float lo, float hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). n must be positive.
  int uniform_int(int n) { return static_cast<int>(gen_() % static_cast<uint32_t>(n)); }

 private:
  std::mt19937 gen_;
};

}  // namespace sxf
