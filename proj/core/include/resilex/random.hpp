#pragma once

// Portable seeded randomness. std::mt19937_64 and std::seed_seq are fully
// specified by the standard; the distributions are not, so the bounded and
// real draws below are implemented here to keep outputs identical across
// standard libraries.

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace resilex::rng {

using Engine = std::mt19937_64;

/// Engine for an independent stream, derived from (seed, stream) alone.
inline Engine make_engine(std::uint64_t seed, std::uint64_t stream = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return Engine(seq);
}

/// Uniform integer in [0, n); n must be positive.
inline std::uint64_t below(Engine& g, std::uint64_t n) {
  const std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n
  for (;;) {
    const std::uint64_t x = g();
    if (x >= threshold) return x % n;
  }
}

/// Uniform double in [0, 1) with 53 random bits.
inline double unit(Engine& g) { return static_cast<double>(g() >> 11) * 0x1.0p-53; }

inline double uniform(Engine& g, double lo, double hi) { return lo + (hi - lo) * unit(g); }

inline bool bernoulli(Engine& g, double p) { return unit(g) < p; }

/// Fisher-Yates with the portable bounded draw.
template <typename T>
void shuffle(std::vector<T>& v, Engine& g) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(below(g, i));
    using std::swap;
    swap(v[i - 1], v[j]);
  }
}

}  // namespace resilex::rng
