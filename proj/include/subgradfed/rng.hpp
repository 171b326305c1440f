#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string_view>

namespace subgradfed {

/// SplitMix64 step: advances `state` by the golden-ratio increment and
/// returns the finalized output. Used for seeding and for seed mixing.
std::uint64_t splitmix64(std::uint64_t& state);

/// Derives an independent 64-bit seed from (seed, tag). Two calls with
/// different tags give unrelated streams; the mapping is fixed across
/// platforms:
///   mix_seed(s, t) = splitmix64(s ^ splitmix64(t + 0x9E3779B97F4A7C15))
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag);

/// FNV-1a over the bytes of `label`; turns names into seed-mixing tags.
std::uint64_t hash_label(std::string_view label);

/// xoshiro256** generator seeded through SplitMix64.
///
/// State transition (per call to next_u64):
///   result = rotl(s1 * 5, 7) * 9
///   t = s1 << 17; s2 ^= s0; s3 ^= s1; s1 ^= s2; s0 ^= s3; s2 ^= t;
///   s3 = rotl(s3, 45)
/// Normal variates use Box-Muller; the second value of each pair is cached
/// and is part of the generator state, so copies replay identically.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()() { return next_u64(); }

  std::uint64_t next_u64();

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();

  /// Uniform integer in [0, bound); Lemire's multiply-shift with rejection.
  std::uint64_t uniform_below(std::uint64_t bound);

  double normal();

  /// Always consumes exactly one uniform draw, whatever p is.
  bool bernoulli(double p);

 private:
  std::array<std::uint64_t, 4> s_{};
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace subgradfed
