#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "subgradfed/compressors.hpp"
#include "subgradfed/error.hpp"
#include "test_util.hpp"

using namespace subgradfed;

namespace {

std::vector<std::uint32_t> idx(std::initializer_list<std::uint32_t> v) { return v; }

bool strictly_increasing(const CompressedVector& c) {
  for (std::size_t j = 1; j < c.indices.size(); ++j) {
    if (c.indices[j - 1] >= c.indices[j]) return false;
  }
  return c.indices.empty() || c.indices.back() < c.dim;
}

}  // namespace

TEST_CASE("topk examples") {
  const Vector x{1, -3, 2, 0};
  auto c = compress_topk(x, 2);
  CHECK(c.indices == idx({1, 2}));
  CHECK(c.values == Vector{-3, 2});
  c = compress_topk(x, 4);
  CHECK(c.to_dense() == x);
  c = compress_topk(Vector{0, 0, 0}, 1);
  CHECK(c.indices == idx({0}));
  CHECK(c.values == Vector{0});
  c = compress_topk(Vector{1, -1, 1, 2}, 2);
  CHECK(c.indices == idx({0, 3}));
}

TEST_CASE("topk equals the brute-force best subset") {
  for (std::size_t d : {3, 5, 6}) {
    for (std::size_t k = 1; k <= d; ++k) {
      for (int rep = 0; rep < 20; ++rep) {
        const auto x = testutil::random_vector(d, 100 * d + 10 * k + rep);
        double best = -1;
        std::vector<std::uint32_t> best_set;
        testutil::for_each_subset(d, k, [&](const std::vector<std::uint32_t>& s) {
          double mass = 0;
          for (auto j : s) mass += std::abs(x[j]);
          if (mass > best) {
            best = mass;
            best_set = s;
          }
        });
        REQUIRE(compress_topk(x, k).indices == best_set);
      }
    }
  }
}

TEST_CASE("topk contraction holds pointwise") {
  for (std::size_t d : {4, 16, 64}) {
    for (std::size_t k : {std::size_t{1}, d / 2, d}) {
      const double alpha = static_cast<double>(k) / static_cast<double>(d);
      for (int rep = 0; rep < 1000; ++rep) {
        const auto x = testutil::random_vector(d, rep * 131 + d + k, 5.0);
        const auto c = compress_topk(x, k).to_dense();
        REQUIRE(dist_sq(c, x) <= (1 - alpha) * norm_sq(x) + 1e-12);
      }
    }
  }
}

TEST_CASE("randk examples") {
  Rng rng(4);
  const Vector x{1, 2, 3, 4};
  CHECK(compress_randk(x, 4, rng).to_dense() == x);
  for (int rep = 0; rep < 50; ++rep) {
    const auto c = compress_randk(x, 2, rng);
    REQUIRE(c.nnz() == 2);
    REQUIRE(strictly_increasing(c));
    for (std::size_t j = 0; j < 2; ++j) REQUIRE(c.values[j] == 2.0 * x[c.indices[j]]);
    if (c.indices == idx({0, 2})) CHECK(c.values == Vector{2, 6});
  }
}

TEST_CASE("randk moments by subset enumeration") {
  for (std::size_t d = 1; d <= 6; ++d) {
    for (std::size_t k = 1; k <= d; ++k) {
      const auto x = testutil::random_vector(d, 7 * d + k, 2.0);
      Vector mean(d, 0.0);
      double var = 0.0;
      std::size_t count = 0;
      const double scale = static_cast<double>(d) / static_cast<double>(k);
      testutil::for_each_subset(d, k, [&](const std::vector<std::uint32_t>& s) {
        Vector q(d, 0.0);
        for (auto j : s) q[j] = scale * x[j];
        for (std::size_t j = 0; j < d; ++j) mean[j] += q[j];
        var += dist_sq(q, x);
        ++count;
      });
      for (auto& v : mean) v /= static_cast<double>(count);
      var /= static_cast<double>(count);
      CHECK(testutil::max_abs_diff(mean, x) <= 1e-12);
      const CompressorSpec spec{CompressorKind::SameRandK, k, d, 1};
      CHECK(std::abs(var - spec.omega() * norm_sq(x)) <= 1e-12);
    }
  }
  // d=3, k=1 on the all-ones vector.
  Vector mean(3, 0.0);
  testutil::for_each_subset(3, 1, [&](const std::vector<std::uint32_t>& s) { mean[s[0]] += 3.0 / 3.0; });
  CHECK(mean == Vector{1, 1, 1});
}

TEST_CASE("randk draws every subset with equal probability") {
  Rng rng(21);
  const std::size_t d = 5, k = 2;
  std::map<std::vector<std::uint32_t>, int> counts;
  const int draws = 100000;
  const Vector x(d, 1.0);
  for (int i = 0; i < draws; ++i) ++counts[compress_randk(x, k, rng).indices];
  REQUIRE(counts.size() == 10);
  double chi2 = 0;
  for (const auto& [s, c] : counts) chi2 += (c - draws / 10.0) * (c - draws / 10.0) / (draws / 10.0);
  CHECK(chi2 < 27.88);  // 0.999 quantile, 9 degrees of freedom
}

TEST_CASE("unscaled randk is contractive in expectation with alpha = k/d") {
  const std::size_t d = 5;
  const auto x = testutil::random_vector(d, 8);
  for (std::size_t k = 1; k <= d; ++k) {
    double err = 0;
    std::size_t count = 0;
    testutil::for_each_subset(d, k, [&](const std::vector<std::uint32_t>& s) {
      Vector c(d, 0.0);
      for (auto j : s) c[j] = x[j];
      err += dist_sq(c, x);
      ++count;
    });
    err /= static_cast<double>(count);
    const CompressorSpec spec{CompressorKind::ScaledRandK, k, d, 1};
    CHECK(std::abs(err - (1 - spec.alpha()) * norm_sq(x)) <= 1e-12);
  }
  Rng rng(2);
  const auto c = compress_randk_unscaled(x, 3, rng);
  for (std::size_t j = 0; j < c.nnz(); ++j) CHECK(c.values[j] == x[c.indices[j]]);
}

TEST_CASE("permk examples") {
  const Vector x{1.5, -2, 3, 7};
  const std::vector<std::uint32_t> perm{2, 0, 3, 1};
  const auto out = compress_permk_with(x, 2, perm);
  REQUIRE(out.size() == 2);
  CHECK(out[0].indices == idx({0, 2}));
  CHECK(out[0].values == Vector{3, 6});
  CHECK(out[1].indices == idx({1, 3}));
  CHECK(out[1].values == Vector{-4, 14});

  Rng rng(1);
  const auto single = compress_permk_batch(Vector{4, 5}, 1, rng);
  REQUIRE(single.size() == 1);
  CHECK(single[0].to_dense() == Vector{4, 5});

  for (const auto& c : compress_permk_batch(Vector(6, 0.0), 3, rng)) {
    CHECK(c.nnz() == 2);
    CHECK(c.to_dense() == Vector(6, 0.0));
  }
  CHECK_THROWS_AS(compress_permk_batch(Vector(5, 1.0), 2, rng), ConfigError);
}

TEST_CASE("permk reconstructs the input on every draw") {
  Rng rng(99);
  const std::pair<std::size_t, std::size_t> shapes[] = {{4, 2}, {6, 3}, {12, 4}, {100, 10}, {200, 10}};
  for (auto [d, n] : shapes) {
    for (int rep = 0; rep < 200; ++rep) {
      const auto x = testutil::random_vector(d, rep + d, 10.0);
      const auto out = compress_permk_batch(x, n, rng);
      Vector mean(d, 0.0);
      std::vector<int> hits(d, 0);
      for (const auto& c : out) {
        REQUIRE(c.nnz() == d / n);
        REQUIRE(strictly_increasing(c));
        for (auto j : c.indices) ++hits[j];
        c.add_to(mean);
      }
      for (auto& v : mean) v /= static_cast<double>(n);
      REQUIRE(testutil::max_abs_diff(mean, x) <= 1e-12);
      REQUIRE(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
    }
  }
}

TEST_CASE("permk is unbiased per worker over all permutations") {
  const std::pair<std::size_t, std::size_t> shapes[] = {{2, 2}, {4, 2}, {4, 4}, {3, 3}, {5, 5}};
  for (auto [d, n] : shapes) {
    const auto x = testutil::random_vector(d, d * 10 + n);
    std::vector<std::uint32_t> perm(d);
    std::iota(perm.begin(), perm.end(), 0U);
    std::vector<Vector> sums(n, Vector(d, 0.0));
    double count = 0;
    do {
      const auto out = compress_permk_with(x, n, perm);
      for (std::size_t i = 0; i < n; ++i) out[i].add_to(sums[i]);
      ++count;
    } while (std::next_permutation(perm.begin(), perm.end()));
    for (auto& s : sums) {
      for (auto& v : s) v /= count;
      CHECK(testutil::max_abs_diff(s, x) <= 1e-12);
    }
  }
}

TEST_CASE("compress_batch deployment modes") {
  const std::size_t d = 8, n = 4;
  const auto x = testutil::random_vector(d, 5);
  std::vector<Rng> workers;
  for (std::size_t i = 0; i < n; ++i) workers.emplace_back(mix_seed(3, i + 1));
  Rng server(mix_seed(3, 0));

  auto same = compress_batch({CompressorKind::SameRandK, 2, d, n}, x, server, workers);
  for (const auto& c : same) CHECK(c.indices == same[0].indices);

  auto ident = compress_batch({CompressorKind::Identity, d, d, n}, x, server, workers);
  for (const auto& c : ident) {
    CHECK(c.nnz() == d);
    CHECK(c.to_dense() == x);
  }

  auto topk = compress_batch({CompressorKind::TopK, 3, d, n}, x, server, workers);
  for (const auto& c : topk) CHECK(c.indices == compress_topk(x, 3).indices);

  // Independent draws: worker i reproduces a standalone draw on its own stream.
  std::vector<Rng> fresh;
  for (std::size_t i = 0; i < n; ++i) fresh.emplace_back(mix_seed(3, i + 1));
  Rng unused(0);
  auto ind = compress_batch({CompressorKind::IndRandK, 2, d, n}, x, unused, fresh);
  bool any_differ = false;
  for (std::size_t i = 0; i < n; ++i) {
    Rng own(mix_seed(3, i + 1));
    CHECK(ind[i].indices == compress_randk(x, 2, own).indices);
    any_differ = any_differ || ind[i].indices != ind[0].indices;
  }
  CHECK(any_differ);
}

TEST_CASE("identical seeds give identical outputs") {
  const auto x = testutil::random_vector(50, 1);
  Rng a(77), b(77);
  for (int rep = 0; rep < 20; ++rep) {
    CHECK(compress_randk(x, 7, a).indices == compress_randk(x, 7, b).indices);
    const auto pa = compress_permk_batch(x, 5, a);
    const auto pb = compress_permk_batch(x, 5, b);
    for (std::size_t i = 0; i < 5; ++i) CHECK(pa[i].values == pb[i].values);
  }
}

TEST_CASE("spec parameters and validation") {
  CHECK(CompressorSpec{CompressorKind::TopK, 3, 12, 1}.alpha() == 0.25);
  CHECK(CompressorSpec{CompressorKind::IndRandK, 3, 12, 1}.omega() == 3.0);
  CHECK(CompressorSpec{CompressorKind::PermK, 3, 12, 4}.omega() == 3.0);
  CHECK(CompressorSpec{CompressorKind::Identity, 12, 12, 4}.alpha() == 1.0);
  CHECK(CompressorSpec{CompressorKind::Identity, 12, 12, 4}.omega() == 0.0);
  CHECK_THROWS_AS(CompressorSpec({CompressorKind::TopK, 3, 12, 1}).omega(), ConfigError);
  CHECK_THROWS_AS(CompressorSpec({CompressorKind::PermK, 3, 12, 4}).alpha(), ConfigError);
  CHECK_THROWS_AS(CompressorSpec({CompressorKind::TopK, 0, 12, 1}).validate(), ConfigError);
  CHECK_THROWS_AS(CompressorSpec({CompressorKind::TopK, 13, 12, 1}).validate(), ConfigError);
  CHECK_THROWS_AS(CompressorSpec({CompressorKind::PermK, 3, 10, 3}).validate(), ConfigError);
  CHECK_THROWS_AS(CompressorSpec({CompressorKind::PermK, 2, 12, 4}).validate(), ConfigError);
  CHECK_NOTHROW(CompressorSpec({CompressorKind::PermK, 3, 12, 4}).validate());
  CHECK_THROWS_AS(compress_topk(Vector{1, 2}, 3), ConfigError);
  Rng rng(0);
  CHECK_THROWS_AS(compress_randk(Vector{1, 2}, 0, rng), ConfigError);
  for (auto kind : {CompressorKind::TopK, CompressorKind::SameRandK, CompressorKind::IndRandK,
                    CompressorKind::PermK, CompressorKind::Identity, CompressorKind::ScaledRandK}) {
    CHECK(compressor_kind_from_string(to_string(kind)) == kind);
  }
  CHECK_THROWS_AS(compressor_kind_from_string("top"), ConfigError);
}

TEST_CASE("expected density") {
  CHECK(expected_density({CompressorKind::SameRandK, 10, 1000, 1}, 0.0) == 10.0);
  CHECK(expected_density({CompressorKind::SameRandK, 10, 1000, 1}, 0.01) ==
        doctest::Approx(1000 * 0.01 + 0.99 * 10).epsilon(1e-15));
  CHECK(expected_density({CompressorKind::Identity, 1000, 1000, 1}, 0.3) == 1000.0);
}
