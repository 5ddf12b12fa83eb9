#pragma once

// Deterministic random streams.  The engine is std::mt19937_64 (seeding with
// a single 64-bit value is fully specified by the standard) and all variate
// transforms are written out explicitly, so identical seeds give identical
// draws across platforms and across thread counts.  Independent replications
// derive per-replication seeds with a splitmix64 finalizer.

#include <cmath>
#include <cstdint>
#include <random>

namespace hazmle {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Decorrelates (seed, stream) pairs; stream 0 with offset 0 is the base.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream,
                                 std::uint64_t offset = 0) {
  std::uint64_t z = splitmix64(seed);
  z = splitmix64(z ^ (0x9E3779B97F4A7C15ULL * (stream + 1)));
  z = splitmix64(z ^ (0xD1B54A32D192ED03ULL * (offset + 1)));
  return z;
}

class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}
  RandomStream(std::uint64_t seed, std::uint64_t stream)
      : engine_(derive_seed(seed, stream)) {}

  // Uniform on the open interval (0,1): 53-bit mantissa with a half-ulp
  // offset, so downstream logs and quantile maps never see 0 or 1.
  double uniform01() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double exponential() { return -std::log1p(-uniform01()); }

  // Box-Muller; caches the second variate.
  double normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    double u1 = uniform01();
    double u2 = uniform01();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    cached_ = r * std::sin(a);
    have_cached_ = true;
    return r * std::cos(a);
  }

 private:
  std::mt19937_64 engine_;
  double cached_ = 0;
  bool have_cached_ = false;
};

}  // namespace hazmle
