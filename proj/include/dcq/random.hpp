#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace dcq {

/// SplitMix64 finalizer, used to derive independent stream seeds.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0) {
  return mix_seed(seed ^ mix_seed(stream ^ mix_seed(index)));
}

/// Deterministic generator. The engine's output sequence is fixed by the C++
/// standard; the mappings to reals and indices are done here rather than with
/// <random> distributions, whose algorithms are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n); n must be positive.
  std::size_t index(std::size_t n) {
    const unsigned __int128 wide = static_cast<unsigned __int128>(engine_()) * n;
    return static_cast<std::size_t>(wide >> 64);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace dcq
