#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "subgradfed/linalg.hpp"
#include "subgradfed/rng.hpp"

namespace subgradfed {

enum class CompressorKind {
  TopK,         // contractive, deterministic, alpha = k/d
  SameRandK,    // unbiased RandK, one draw shared by all workers
  IndRandK,     // unbiased RandK, an independent draw per worker
  PermK,        // correlated: disjoint permutation blocks, scaled by n
  Identity,     // no compression
  ScaledRandK,  // (k/d) * RandK: random selection without rescaling, alpha = k/d
};

std::string_view to_string(CompressorKind kind);
CompressorKind compressor_kind_from_string(std::string_view name);

struct CompressorSpec {
  CompressorKind kind = CompressorKind::Identity;
  std::size_t k = 1;
  std::size_t dim = 1;
  std::size_t n_workers = 1;

  /// Throws ConfigError when the invariants are violated
  /// (1 <= k <= d; PermK needs d % n == 0 and k == d / n).
  void validate() const;

  /// Contraction parameter; only meaningful for TopK, ScaledRandK, Identity.
  double alpha() const;
  /// Variance parameter; only meaningful for the unbiased kinds and Identity.
  double omega() const;

  bool contractive() const;
  bool unbiased() const;
  /// True when every kept entry is transmitted unscaled (C(x)_j is 0 or x_j).
  bool pure_selection() const;
};

/// Sparse message: strictly increasing indices in [0, dim), one value each.
struct CompressedVector {
  std::vector<std::uint32_t> indices;
  std::vector<double> values;
  std::size_t dim = 0;

  std::size_t nnz() const { return indices.size(); }
  Vector to_dense() const;
  /// target[idx] += values (size must equal dim).
  void add_to(std::span<double> target) const;
};

/// Keeps the k entries of largest magnitude; ties go to the lowest index.
CompressedVector compress_topk(std::span<const double> x, std::size_t k);

/// Unbiased RandK: uniform k-subset (partial Fisher-Yates), values scaled by d/k.
CompressedVector compress_randk(std::span<const double> x, std::size_t k, Rng& rng);

/// Contractive RandK: same subset law as compress_randk but values are kept
/// unscaled, so E||C(x) - x||^2 = (1 - k/d) ||x||^2.
CompressedVector compress_randk_unscaled(std::span<const double> x, std::size_t k, Rng& rng);

/// PermK for a given permutation of {0, ..., d-1}: worker i receives
/// n * x on perm[q*i, q*(i+1)), q = d / n.
std::vector<CompressedVector> compress_permk_with(std::span<const double> x, std::size_t n,
                                                  std::span<const std::uint32_t> permutation);

/// Draws one permutation (full Fisher-Yates on `rng`) and applies PermK.
std::vector<CompressedVector> compress_permk_batch(std::span<const double> x, std::size_t n,
                                                   Rng& rng);

/// One message per worker according to the deployment mode of `spec`.
/// Shared randomness (SameRandK, PermK, ScaledRandK) comes from `server_rng`;
/// IndRandK draws worker i's subset from `worker_rngs[i]`.
std::vector<CompressedVector> compress_batch(const CompressorSpec& spec, std::span<const double> x,
                                             Rng& server_rng, std::span<Rng> worker_rngs);

/// Single broadcast message for the server-side contractive compressors.
CompressedVector compress_one(const CompressorSpec& spec, std::span<const double> x, Rng& rng);

/// zeta = d p + (1 - p) k for sparsifiers; d for Identity.
double expected_density(const CompressorSpec& spec, double p_full);

}  // namespace subgradfed
