#pragma once

// Deterministic randomness used everywhere seeds appear. The generators are
// fixed, versioned algorithms so runs replicate bit-for-bit across platforms
// and standard library implementations:
//   - seed mixing / derivation: splitmix64 finalizer (Steele et al., 2014)
//   - stream generator:         xoshiro256** 1.0 (Blackman & Vigna, 2018)
//   - bounded integers:         Lemire multiply-shift with rejection
//   - shuffling:                Fisher-Yates over bounded()
// std::uniform_int_distribution and friends are deliberately not used; their
// output is implementation-defined.

#include <cstdint>
#include <string_view>
#include <vector>

namespace selfalign::rng {

/// splitmix64 finalizer; also usable as a 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// FNV-1a over raw bytes; used to fold string identifiers into seeds.
constexpr std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

/// Derives an independent sub-seed from a base seed, a purpose tag, an
/// optional string identifier (e.g. a probe id) and an optional index.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::string_view tag,
                                    std::string_view id = {},
                                    std::uint64_t index = 0) {
  std::uint64_t h = mix64(base ^ fnv1a64(tag));
  h = mix64(h ^ fnv1a64(id));
  return mix64(h ^ index);
}

/// xoshiro256** 1.0, state seeded through splitmix64.
class Xoshiro256StarStar {
 public:
  explicit Xoshiro256StarStar(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : state_) {
      sm += 0x9E3779B97F4A7C15ULL;
      std::uint64_t z = sm;
      z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
      z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
      word = z ^ (z >> 31);
    }
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform double in [0, 1) with 53 bits of precision.
  double next_unit() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t state_[4]{};
};

/// Uniform integer in [0, bound) via Lemire's multiply-shift with rejection.
inline std::uint64_t bounded(Xoshiro256StarStar& gen, std::uint64_t bound) {
  std::uint64_t x = gen.next();
  __uint128_t m = static_cast<__uint128_t>(x) * bound;
  auto low = static_cast<std::uint64_t>(m);
  if (low < bound) {
    const std::uint64_t threshold = -bound % bound;
    while (low < threshold) {
      x = gen.next();
      m = static_cast<__uint128_t>(x) * bound;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

/// In-place Fisher-Yates shuffle.
template <typename T>
void shuffle(std::vector<T>& items, Xoshiro256StarStar& gen) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(bounded(gen, i));
    using std::swap;
    swap(items[i - 1], items[j]);
  }
}

/// First k entries of a Fisher-Yates pass over [0, n): a uniform k-subset
/// in uniform random order.
inline std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k,
                                               Xoshiro256StarStar& gen) {
  std::vector<std::size_t> indices(n);
  for (std::size_t i = 0; i < n; ++i) {
    indices[i] = i;
  }
  for (std::size_t i = 0; i < k && i + 1 < n; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(bounded(gen, n - i));
    std::swap(indices[i], indices[j]);
  }
  indices.resize(k);
  return indices;
}

}  // namespace selfalign::rng
