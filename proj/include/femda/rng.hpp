#pragma once

#include <cstdint>
#include <vector>

namespace femda {

// Splittable counter-style generator built on the splitmix64 finalizer
// (Vigna 2015, public domain; Steele/Lea/Flood splittable PRNG design).
//
// Substreams are derived with split(key): streams obtained from distinct
// key paths are statistically independent, and derivation is a pure
// function of (state, key). Simulation code keys substreams by
// (seed, purpose-tag, cluster, point-index) so that generation is
// reproducible and order-independent.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  SplitMix64() = default;
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~std::uint64_t{0}; }

  result_type operator()() {
    std::uint64_t z = (state_ += kGamma);
    return mix(z);
  }

  // Derive the substream identified by `key`; does not advance this stream.
  [[nodiscard]] SplitMix64 split(std::uint64_t key) const {
    return SplitMix64(mix(state_ ^ mix(key + kGamma)));
  }

  std::uint64_t state() const { return state_; }

 private:
  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_ = 0;
};

// Unbiased draw from {0, 1, ..., n-1} (rejection on the top band).
inline std::uint64_t bounded(SplitMix64& rng, std::uint64_t n) {
  const std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n
  for (;;) {
    const std::uint64_t x = rng();
    if (x >= threshold) return x % n;
  }
}

// First k positions of a Fisher-Yates shuffle of {0, ..., n-1}.
inline std::vector<std::size_t> sample_without_replacement(std::size_t n,
                                                           std::size_t k,
                                                           SplitMix64& rng) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  const std::size_t take = k < n ? k : n;
  for (std::size_t i = 0; i < take; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(bounded(rng, n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(take);
  return idx;
}

// Full Fisher-Yates shuffle, deterministic given the stream.
template <typename T>
void shuffle(std::vector<T>& v, SplitMix64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(bounded(rng, i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace femda
