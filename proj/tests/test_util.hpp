#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "subgradfed/linalg.hpp"
#include "subgradfed/rng.hpp"

namespace testutil {

inline std::vector<double> random_vector(std::size_t d, std::uint64_t seed, double scale = 1.0) {
  subgradfed::Rng rng(seed);
  std::vector<double> x(d);
  for (auto& v : x) v = scale * (2.0 * rng.uniform() - 1.0);
  return x;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// Calls f on every k-subset of {0..d-1}, given as an increasing index list.
template <class F>
void for_each_subset(std::size_t d, std::size_t k, F f) {
  std::vector<std::uint32_t> idx(k);
  for (std::size_t i = 0; i < k; ++i) idx[i] = static_cast<std::uint32_t>(i);
  while (true) {
    f(idx);
    std::size_t i = k;
    while (i > 0 && idx[i - 1] == d - k + i - 1) --i;
    if (i == 0) return;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

inline double lin_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

}  // namespace testutil
