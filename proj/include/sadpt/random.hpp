#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace sadpt {

// SplitMix64. Small, fast, and cheap to seed, which matters because every
// solver round gets its own stream derived from (master seed, round index).
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    return mix(z);
  }

  /// Independent stream for round `index` of a run seeded with `master`.
  /// Depends only on the pair, so traces do not change with checkpointing.
  static Rng stream(std::uint64_t master, std::uint64_t index) {
    return Rng(mix(mix(master) ^ (index * 0xD1B54A32D192ED03ULL + 1)));
  }

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

/// Uniform on [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

/// +a or -a with equal probability.
inline double rademacher(Rng& rng, double a) {
  return (rng() >> 63) ? a : -a;
}

/// Exponential(1); strictly positive.
inline double standard_exponential(Rng& rng) {
  const double open_unit = (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
  return -std::log(open_unit);
}

}  // namespace sadpt
