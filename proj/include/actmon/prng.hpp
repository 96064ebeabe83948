#pragma once

#include <cstdint>

namespace actmon {

// splitmix64: tiny deterministic generator. Used instead of <random>
// distributions so that traces are bit-identical across platforms.
struct SplitMix64 {
  std::uint64_t state;

  explicit SplitMix64(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, bound); bound > 0. Modulo bias is irrelevant at the
  // scales used here (bounds << 2^64).
  std::uint64_t below(std::uint64_t bound) { return next() % bound; }

  std::int64_t range(std::int64_t lo, std::int64_t hi) {  // inclusive
    return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo + 1)));
  }

  double unit() {  // [0,1)
    return static_cast<double>(next() >> 11) * (1.0 / 9007199254740992.0);
  }
};

}  // namespace actmon
