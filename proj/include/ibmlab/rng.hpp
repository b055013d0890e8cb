#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace ibmlab {

/// Philox4x32-10 block function (Salmon et al. counter-based generator).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Stream key for (seed, a, b). Distinct tuples give unrelated streams, so
/// adding replicas or particles never shifts existing ones.
constexpr std::uint64_t derive_key(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  return mix64(mix64(mix64(seed) ^ (a + 0x632be59bd9b4e019ULL)) ^ (b + 0x85157af5ULL));
}

/// Stateless access to a counter-indexed random stream.
class CounterStream {
 public:
  explicit CounterStream(std::uint64_t key) : key_{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)} {}

  /// Two independent standard normals for the 128-bit counter (c0, c1, c2).
  std::array<double, 2> normal_pair(std::uint64_t c0, std::uint32_t c1, std::uint32_t c2) const;

  std::array<std::uint32_t, 4> block(std::uint64_t c0, std::uint32_t c1, std::uint32_t c2) const {
    return philox4x32({static_cast<std::uint32_t>(c0), static_cast<std::uint32_t>(c0 >> 32), c1, c2}, key_);
  }

 private:
  std::array<std::uint32_t, 2> key_;
};

/// Sequential engine over a Philox stream; satisfies UniformRandomBitGenerator.
class PhiloxEngine {
 public:
  using result_type = std::uint64_t;

  explicit PhiloxEngine(std::uint64_t key) : stream_(key) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  /// Uniform on (0, 1].
  double uniform_open0();
  /// Uniform on [0, 1).
  double uniform();
  /// Standard normal (Box-Muller, pairs cached).
  double normal();
  /// Chi variate with k > 0 degrees of freedom; k == 0 gives 0.
  double chi(double k);

 private:
  CounterStream stream_;
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int buffered_ = 0;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace ibmlab
