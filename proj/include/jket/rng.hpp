#pragma once

#include <cstdint>
#include <string_view>

namespace jket {

// Deterministic PRNG (splitmix64 core). We avoid std:: distributions on
// purpose: their outputs are implementation-defined, and reproducibility of
// training runs and sampled negatives is part of the contract here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed * 0x9E3779B97F4A7C15ULL + 0x632BE59BD9B4E019ULL) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform integer in [0, n). n must be > 0.
  std::uint64_t next_below(std::uint64_t n) {
    // Rejection sampling on the top bits to avoid modulo bias.
    std::uint64_t threshold = (~n + 1) % n;  // 2^64 mod n
    for (;;) {
      std::uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  // Uniform double in [0, 1).
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform double in [lo, hi).
  double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  bool next_bool() { return (next_u64() & 1ULL) != 0; }

  // Derive an independent stream for a named purpose (task seeds, init
  // streams, per-epoch sampling). Stable across runs and platforms.
  static std::uint64_t derive(std::uint64_t seed, std::string_view label) {
    std::uint64_t h = 1469598103934665603ULL ^ seed;
    for (char c : label) {
      h ^= static_cast<unsigned char>(c);
      h *= 1099511628211ULL;
    }
    return h;
  }

  static Rng derived(std::uint64_t seed, std::string_view label) { return Rng(derive(seed, label)); }

 private:
  std::uint64_t state_;
};

// Fisher-Yates shuffle driven by Rng, used everywhere an ordering must be
// reproducible.
template <typename Vec>
void shuffle(Vec& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng.next_below(i));
    using std::swap;
    swap(v[i - 1], v[j]);
  }
}

}  // namespace jket
