#pragma once

#include <cstdint>
#include <string_view>

namespace marginalia {

/// SplitMix64 finalizer; a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// 64-bit FNV-1a over the bytes of `s`.
constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Child seed for a named sub-stream: mix64(seed ^ fnv1a64(name)).
/// All per-page and per-variant randomness is derived this way from the
/// single corpus seed.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::string_view name) {
  return mix64(seed ^ fnv1a64(name));
}

/// Counter-based stream: the k-th draw is mix64(seed + k * golden). Draws
/// are addressable, so any pixel's noise is independent of visit order.
class CounterRng {
 public:
  explicit constexpr CounterRng(std::uint64_t seed) : seed_(seed) {}

  constexpr std::uint64_t at(std::uint64_t counter) const {
    return mix64(seed_ + counter * 0x9e3779b97f4a7c15ULL);
  }
  constexpr std::uint64_t next() { return at(counter_++); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return to_unit(next()); }
  double uniform_at(std::uint64_t counter) const { return to_unit(at(counter)); }

  /// Uniform integer in [0, n), n > 0, via 128-bit multiply-high.
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next()) * n) >> 64);
  }

  /// Standard normal from draws 2k and 2k+1 (Box-Muller, cosine branch).
  double normal_at(std::uint64_t k) const;

  static constexpr double to_unit(std::uint64_t u) {
    return static_cast<double>(u >> 11) * 0x1.0p-53;
  }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

}  // namespace marginalia
