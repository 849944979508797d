#pragma once
// Self-contained PRNG with an explicit, serializable state.  The standard
// <random> engines are deterministic but the distributions are not specified
// bit-for-bit, and reproducibility of emitted files is a hard requirement
// here, so the draw path is owned end to end.

#include <cstdint>

namespace codesign::rng {

// Used for seed expansion and for mixing stream indices into a base seed.
struct SplitMix64 {
  std::uint64_t state;
  explicit SplitMix64(std::uint64_t seed) : state(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }
};

inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream) {
  SplitMix64 sm(base ^ (0x9e3779b97f4a7c15ull * (stream + 1)));
  return sm.next();
}

// xoshiro256** (public domain reference algorithm).
struct Xoshiro256 {
  std::uint64_t s[4];

  static Xoshiro256 seeded(std::uint64_t seed) {
    SplitMix64 sm(seed);
    Xoshiro256 g;
    for (auto& w : g.s) w = sm.next();
    return g;
  }

  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(s[1] * 5, 7) * 9;
    const std::uint64_t t = s[1] << 17;
    s[2] ^= s[0];
    s[3] ^= s[1];
    s[1] ^= s[2];
    s[0] ^= s[3];
    s[2] ^= t;
    s[3] = rotl(s[3], 45);
    return result;
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n).  Lemire's multiply-shift; the slight modulo
  // bias (< 2^-64 * n) is irrelevant at the sample counts used here and the
  // draw count per call is fixed, which keeps streams reproducible.
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next()) * n) >> 64);
  }

  // Uniform in [lo, hi).
  double range(double lo, double hi) { return lo + (hi - lo) * uniform(); }
};

}  // namespace codesign::rng
