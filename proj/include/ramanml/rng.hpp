#pragma once

// Deterministic seeding. Every random draw in the project flows from one
// master seed through named substreams, so components (sampling, rp-init,
// bp-init, bench) are independently reproducible. mt19937_64 output is
// specified bit-exactly by the standard; the uniform mapping below avoids the
// implementation-defined std::uniform_real_distribution.

#include <cstdint>
#include <random>
#include <string_view>

namespace ramanml {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Seed for substream `name[index]` of a master seed.
inline std::uint64_t substream_seed(std::uint64_t master, std::string_view name,
                                    std::uint64_t index = 0) {
  std::uint64_t x = splitmix64(master ^ fnv1a64(name));
  return splitmix64(x ^ index);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform double in [0, 1), 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  std::uint64_t next_u64() { return engine_(); }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace ramanml
