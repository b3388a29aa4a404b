#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <utility>

namespace fsb {

/// One splitmix64 step: advances `state` by the golden-ratio increment and
/// returns the finalized value. splitmix64_next(s = 0) == 0xE220A8397B1DCDAF.
constexpr std::uint64_t splitmix64_next(std::uint64_t& state) noexcept {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Per-episode seed: splitmix64 of base_seed ^ (episode_index * golden ratio).
constexpr std::uint64_t derive_seed(std::uint64_t base_seed,
                                    std::uint64_t episode_index) noexcept {
  std::uint64_t state = base_seed ^ (episode_index * 0x9E3779B97F4A7C15ULL);
  return splitmix64_next(state);
}

/// xoshiro256** seeded from four consecutive splitmix64 outputs.
class Rng {
 public:
  explicit constexpr Rng(std::uint64_t seed) noexcept {
    std::uint64_t sm = seed;
    for (auto& word : s_) word = splitmix64_next(sm);
  }

  constexpr std::uint64_t next() noexcept {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform integer in [0, bound) by rejection of the biased low range.
  constexpr std::uint64_t uniform_below(std::uint64_t bound) noexcept {
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t r = next();
      if (r >= threshold) return r % bound;
    }
  }

  /// Uniform double in the open interval (0, 1) with 53 random bits.
  double uniform_open() noexcept {
    return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal draw via Box-Muller (one value per call, no caching).
  double normal() noexcept {
    const double u1 = uniform_open();
    const double u2 = uniform_open();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t s_[4]{};
};

/// Partial Fisher-Yates: moves a uniformly random k-subset (in random order)
/// to the front of `items`. Requires k <= items.size().
template <typename T>
void partial_shuffle(std::span<T> items, std::size_t k, Rng& rng) noexcept {
  const std::size_t n = items.size();
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.uniform_below(n - i));
    std::swap(items[i], items[j]);
  }
}

}  // namespace fsb
