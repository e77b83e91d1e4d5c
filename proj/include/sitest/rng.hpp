#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace sitest {

/// Philox4x32-10 counter-based generator.
///
/// Streams are split by key: a run seed and an (experiment, replicate) pair
/// map to the 64-bit key `mix(seed, experiment)` and the high counter words
/// `replicate`. Two replicates never share a counter range, so replicates can
/// be evaluated in any order or in parallel and still produce the same draws.
class Philox4x32 {
 public:
  using result_type = std::uint32_t;

  Philox4x32(std::uint64_t seed, std::uint64_t experiment, std::uint64_t replicate);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  /// One Philox4x32-10 block; exposed for known-answer tests.
  static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> counter,
                                            std::array<std::uint32_t, 2> key);

  /// Uniform double in (0, 1), 53 random bits.
  double uniform();

 private:
  void refill();

  std::array<std::uint32_t, 2> key_{};
  std::array<std::uint32_t, 4> counter_{};
  std::array<std::uint32_t, 4> block_{};
  int next_ = 4;
};

/// Standard normal draws by the polar Box-Muller method, pair-cached.
class NormalSource {
 public:
  explicit NormalSource(Philox4x32& gen) : gen_(gen) {}
  double operator()();

 private:
  Philox4x32& gen_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace sitest
