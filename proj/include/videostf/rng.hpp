#pragma once

/// Seed derivation and deterministic random draws.
///
/// Every stochastic choice in the library flows from an explicit 64-bit seed
/// through one named scheme, so a run is reproducible from its master seed
/// alone and identical seeds produce byte-identical plans on any platform:
///
///   - mix64:       the SplitMix64 output finalizer (Steele/Lea/Flood).
///   - fnv1a64:     FNV-1a over bytes, used to fold strings into seeds and as
///                  the content digest for frame files.
///   - split:       split(seed, part, ...) folds each part into the seed,
///                  h <- mix64(h ^ fold(part)); integral parts fold through
///                  mix64(part + gamma), string parts through fnv1a64.
///   - SplitMix64:  the counter-based stream generator; bounded draws use
///                  rejection sampling, never std::uniform_int_distribution
///                  (whose output is implementation-defined).

#include <cstdint>
#include <numeric>
#include <string_view>
#include <vector>

namespace videostf::rng {

inline constexpr uint64_t kGamma = 0x9E3779B97F4A7C15ull;

constexpr uint64_t fnv1a64(std::string_view bytes) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

// SplitMix64 output finalizer.
constexpr uint64_t mix64(uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

constexpr uint64_t split(uint64_t seed, uint64_t index) {
  return mix64(seed ^ mix64(index + kGamma));
}

inline uint64_t split(uint64_t seed, std::string_view name) {
  return mix64(seed ^ fnv1a64(name));
}

template <typename First, typename Second, typename... Rest>
uint64_t split(uint64_t seed, First first, Second second, Rest... rest) {
  return split(split(seed, first), second, rest...);
}

class SplitMix64 {
 public:
  explicit constexpr SplitMix64(uint64_t seed) : state_(seed) {}

  constexpr uint64_t next() {
    state_ += kGamma;
    return mix64(state_);
  }

  // Unbiased draw from [0, n) via rejection below the zone boundary.
  uint64_t bounded(uint64_t n) {
    const uint64_t threshold = (0 - n) % n;  // (2^64 - n) mod n
    for (;;) {
      const uint64_t r = next();
      if (r >= threshold) return r % n;
    }
  }

 private:
  uint64_t state_;
};

// First k entries of a partial Fisher-Yates pass over [0, population):
// k distinct indices, uniform without replacement, in draw order.
inline std::vector<size_t> draw_distinct(SplitMix64& gen, size_t population,
                                         size_t k) {
  std::vector<size_t> pool(population);
  std::iota(pool.begin(), pool.end(), size_t{0});
  for (size_t i = 0; i < k && i + 1 < population; ++i) {
    const size_t j = i + static_cast<size_t>(gen.bounded(population - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  return pool;
}

// Uniform permutation of [0, n) (full Fisher-Yates).
inline std::vector<size_t> permutation(SplitMix64& gen, size_t n) {
  return draw_distinct(gen, n, n);
}

inline std::string to_hex(uint64_t v) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<size_t>(i)] = kDigits[v & 0xf];
    v >>= 4;
  }
  return out;
}

}  // namespace videostf::rng
