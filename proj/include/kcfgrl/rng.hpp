#ifndef KCFGRL_RNG_HPP
#define KCFGRL_RNG_HPP

#include <cstdint>
#include <string_view>

namespace kcfgrl {

// splitmix64 step. Small, fast, and identical on every platform, which is
// what the reproducibility guarantees of this project rest on (std::mt19937
// would do, but the std distributions are implementation-defined).
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// FNV-1a over bytes; used to derive stable per-name hash seeds.
inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xCBF29CE484222325ull) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

// Deterministic pseudo-random stream.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() { return splitmix64(state_); }

  // Uniform double in [0, 1).
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in [lo, hi).
  double next_double(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // Uniform integer in [0, n). n must be > 0.
  std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

  // Forks an independent substream labelled by a tag; streams forked with
  // distinct tags never correlate with the parent or each other.
  SplitMix64 fork(std::string_view tag) const {
    return SplitMix64(splitmix_once(state_ ^ fnv1a64(tag)));
  }

 private:
  static std::uint64_t splitmix_once(std::uint64_t s) { return splitmix64(s); }
  std::uint64_t state_;
};

// Stable unit-interval value derived from a string key and a seed. Used by
// the synthetic benchmark so that coefficients do not depend on container
// iteration order.
inline double hashed_unit(std::uint64_t seed, std::string_view key) {
  std::uint64_t s = fnv1a64(key) ^ (seed * 0x9E3779B97F4A7C15ull);
  return static_cast<double>(splitmix64(s) >> 11) * 0x1.0p-53;
}

}  // namespace kcfgrl

#endif
