#include "subgradfed/compressors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "subgradfed/error.hpp"

namespace subgradfed {

namespace {

struct KindName {
  CompressorKind kind;
  std::string_view name;
};

constexpr KindName kKindNames[] = {
    {CompressorKind::TopK, "topk"},          {CompressorKind::SameRandK, "same_randk"},
    {CompressorKind::IndRandK, "ind_randk"}, {CompressorKind::PermK, "permk"},
    {CompressorKind::Identity, "identity"},  {CompressorKind::ScaledRandK, "scaled_randk"},
};

void check_k(std::size_t k, std::size_t d) {
  if (k < 1 || k > d) {
    throw ConfigError("compressor k=" + std::to_string(k) + " must lie in [1, " +
                      std::to_string(d) + "]");
  }
}

std::vector<std::uint32_t> identity_permutation(std::size_t d) {
  std::vector<std::uint32_t> perm(d);
  std::iota(perm.begin(), perm.end(), 0U);
  return perm;
}

// First k entries of the returned array form a uniform k-subset.
std::vector<std::uint32_t> sample_subset(std::size_t d, std::size_t k, Rng& rng) {
  auto perm = identity_permutation(d);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + rng.uniform_below(d - i);
    std::swap(perm[i], perm[j]);
  }
  perm.resize(k);
  std::sort(perm.begin(), perm.end());
  return perm;
}

CompressedVector gather(std::span<const double> x, std::vector<std::uint32_t> indices,
                        double scale) {
  CompressedVector out;
  out.dim = x.size();
  out.values.reserve(indices.size());
  for (auto idx : indices) out.values.push_back(scale * x[idx]);
  out.indices = std::move(indices);
  return out;
}

CompressedVector identity_message(std::span<const double> x) {
  return gather(x, identity_permutation(x.size()), 1.0);
}

}  // namespace

std::string_view to_string(CompressorKind kind) {
  for (const auto& entry : kKindNames) {
    if (entry.kind == kind) return entry.name;
  }
  return "unknown";
}

CompressorKind compressor_kind_from_string(std::string_view name) {
  for (const auto& entry : kKindNames) {
    if (entry.name == name) return entry.kind;
  }
  throw ConfigError("unknown compressor kind '" + std::string(name) + "'");
}

void CompressorSpec::validate() const {
  if (dim < 1) throw ConfigError("compressor dim must be >= 1");
  if (n_workers < 1) throw ConfigError("compressor n_workers must be >= 1");
  check_k(k, dim);
  if (kind == CompressorKind::PermK) {
    if (dim % n_workers != 0) {
      throw ConfigError("PermK requires d % n == 0 (d=" + std::to_string(dim) +
                        ", n=" + std::to_string(n_workers) + ")");
    }
    if (k != dim / n_workers) {
      throw ConfigError("PermK requires k == d / n = " + std::to_string(dim / n_workers));
    }
  }
}

double CompressorSpec::alpha() const {
  switch (kind) {
    case CompressorKind::Identity:
      return 1.0;
    case CompressorKind::TopK:
    case CompressorKind::ScaledRandK:
      return static_cast<double>(k) / static_cast<double>(dim);
    default:
      throw ConfigError(std::string("alpha is undefined for compressor ") +
                        std::string(to_string(kind)));
  }
}

double CompressorSpec::omega() const {
  switch (kind) {
    case CompressorKind::Identity:
      return 0.0;
    case CompressorKind::SameRandK:
    case CompressorKind::IndRandK:
      return static_cast<double>(dim) / static_cast<double>(k) - 1.0;
    case CompressorKind::PermK:
      return static_cast<double>(n_workers) - 1.0;
    default:
      throw ConfigError(std::string("omega is undefined for compressor ") +
                        std::string(to_string(kind)));
  }
}

bool CompressorSpec::contractive() const {
  return kind == CompressorKind::TopK || kind == CompressorKind::ScaledRandK ||
         kind == CompressorKind::Identity;
}

bool CompressorSpec::unbiased() const {
  return kind == CompressorKind::SameRandK || kind == CompressorKind::IndRandK ||
         kind == CompressorKind::PermK || kind == CompressorKind::Identity;
}

bool CompressorSpec::pure_selection() const { return contractive(); }

Vector CompressedVector::to_dense() const {
  Vector out(dim, 0.0);
  for (std::size_t j = 0; j < indices.size(); ++j) out[indices[j]] = values[j];
  return out;
}

void CompressedVector::add_to(std::span<double> target) const {
  if (target.size() != dim) throw DimensionError("CompressedVector::add_to: size mismatch");
  for (std::size_t j = 0; j < indices.size(); ++j) target[indices[j]] += values[j];
}

CompressedVector compress_topk(std::span<const double> x, std::size_t k) {
  const std::size_t d = x.size();
  check_k(k, d);
  auto order = identity_permutation(d);
  auto larger = [&x](std::uint32_t a, std::uint32_t b) {
    const double fa = std::abs(x[a]);
    const double fb = std::abs(x[b]);
    return fa > fb || (fa == fb && a < b);
  };
  if (k < d) {
    std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k - 1),
                     order.end(), larger);
    order.resize(k);
  }
  std::sort(order.begin(), order.end());
  return gather(x, std::move(order), 1.0);
}

CompressedVector compress_randk(std::span<const double> x, std::size_t k, Rng& rng) {
  const std::size_t d = x.size();
  check_k(k, d);
  const double scale = static_cast<double>(d) / static_cast<double>(k);
  return gather(x, sample_subset(d, k, rng), scale);
}

CompressedVector compress_randk_unscaled(std::span<const double> x, std::size_t k, Rng& rng) {
  check_k(k, x.size());
  return gather(x, sample_subset(x.size(), k, rng), 1.0);
}

std::vector<CompressedVector> compress_permk_with(std::span<const double> x, std::size_t n,
                                                  std::span<const std::uint32_t> permutation) {
  const std::size_t d = x.size();
  if (n < 1 || d % n != 0) {
    throw ConfigError("PermK requires d % n == 0 (d=" + std::to_string(d) +
                      ", n=" + std::to_string(n) + ")");
  }
  if (permutation.size() != d) throw DimensionError("PermK permutation has wrong length");
  const std::size_t q = d / n;
  const double scale = static_cast<double>(n);
  std::vector<CompressedVector> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::uint32_t> block(permutation.begin() + static_cast<std::ptrdiff_t>(q * i),
                                     permutation.begin() + static_cast<std::ptrdiff_t>(q * (i + 1)));
    std::sort(block.begin(), block.end());
    out.push_back(gather(x, std::move(block), scale));
  }
  return out;
}

std::vector<CompressedVector> compress_permk_batch(std::span<const double> x, std::size_t n,
                                                   Rng& rng) {
  const std::size_t d = x.size();
  if (n < 1 || d % n != 0) {
    throw ConfigError("PermK requires d % n == 0 (d=" + std::to_string(d) +
                      ", n=" + std::to_string(n) + ")");
  }
  auto perm = identity_permutation(d);
  for (std::size_t i = d; i > 1; --i) {
    const std::size_t j = rng.uniform_below(i);
    std::swap(perm[i - 1], perm[j]);
  }
  return compress_permk_with(x, n, perm);
}

CompressedVector compress_one(const CompressorSpec& spec, std::span<const double> x, Rng& rng) {
  if (x.size() != spec.dim) throw DimensionError("compress_one: input size != spec.dim");
  switch (spec.kind) {
    case CompressorKind::TopK:
      return compress_topk(x, spec.k);
    case CompressorKind::ScaledRandK:
      return compress_randk_unscaled(x, spec.k, rng);
    case CompressorKind::SameRandK:
    case CompressorKind::IndRandK:
      return compress_randk(x, spec.k, rng);
    case CompressorKind::Identity:
      return identity_message(x);
    case CompressorKind::PermK:
      break;
  }
  throw ConfigError("PermK produces one message per worker; use compress_batch");
}

std::vector<CompressedVector> compress_batch(const CompressorSpec& spec, std::span<const double> x,
                                             Rng& server_rng, std::span<Rng> worker_rngs) {
  if (x.size() != spec.dim) throw DimensionError("compress_batch: input size != spec.dim");
  const std::size_t n = spec.n_workers;
  switch (spec.kind) {
    case CompressorKind::PermK:
      return compress_permk_batch(x, n, server_rng);
    case CompressorKind::IndRandK: {
      if (worker_rngs.size() != n) {
        throw ConfigError("IndRandK needs one generator per worker");
      }
      std::vector<CompressedVector> out;
      out.reserve(n);
      for (std::size_t i = 0; i < n; ++i) out.push_back(compress_randk(x, spec.k, worker_rngs[i]));
      return out;
    }
    default:
      return std::vector<CompressedVector>(n, compress_one(spec, x, server_rng));
  }
}

double expected_density(const CompressorSpec& spec, double p_full) {
  const auto d = static_cast<double>(spec.dim);
  if (spec.kind == CompressorKind::Identity) return d;
  return d * p_full + (1.0 - p_full) * static_cast<double>(spec.k);
}

}  // namespace subgradfed
