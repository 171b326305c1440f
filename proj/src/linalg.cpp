#include "subgradfed/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "subgradfed/error.hpp"

namespace subgradfed {

namespace {

void require_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw DimensionError(std::string(what) + ": size " + std::to_string(a) +
                         " does not match " + std::to_string(b));
  }
}

// k-th eigenvalue of the unit pattern, k in [1, d].
double pattern_eigenvalue(std::size_t k, std::size_t d) {
  if (d == 1) return 2.0;
  const double s = std::sin(static_cast<double>(k) * std::numbers::pi /
                            (2.0 * static_cast<double>(d + 1)));
  return 4.0 * s * s;
}

}  // namespace

SymTridiagMatrix::SymTridiagMatrix(std::size_t dim_, double scale_, double shift_)
    : dim(dim_), scale(scale_), shift(shift_) {
  if (dim == 0) throw DimensionError("SymTridiagMatrix: dim must be >= 1");
}

void matvec_into(const SymTridiagMatrix& m, std::span<const double> x, std::span<double> out) {
  require_same_size(x.size(), m.dim, "matvec input");
  require_same_size(out.size(), m.dim, "matvec output");
  const std::size_t d = m.dim;
  const double s = m.scale;
  const double c = m.shift;
  if (d == 1) {
    out[0] = s * (2.0 * x[0]) + c * x[0];
    return;
  }
  out[0] = s * (2.0 * x[0] - x[1]) + c * x[0];
  for (std::size_t j = 1; j + 1 < d; ++j) {
    out[j] = s * (2.0 * x[j] - x[j - 1] - x[j + 1]) + c * x[j];
  }
  out[d - 1] = s * (2.0 * x[d - 1] - x[d - 2]) + c * x[d - 1];
}

Vector matvec(const SymTridiagMatrix& m, std::span<const double> x) {
  Vector out(m.dim);
  matvec_into(m, x, out);
  return out;
}

EigExtremes eig_extremes(const SymTridiagMatrix& m) {
  const double low = m.scale * pattern_eigenvalue(1, m.dim) + m.shift;
  const double high = m.scale * pattern_eigenvalue(m.dim, m.dim) + m.shift;
  const double lmin = std::min(low, high);
  const double lmax = std::max(low, high);
  return {lmin, lmax, std::max(std::abs(lmin), std::abs(lmax))};
}

std::vector<double> materialize_dense(const SymTridiagMatrix& m) {
  if (m.dim > 64) throw DimensionError("materialize_dense: dim > 64 is not allowed");
  const std::size_t d = m.dim;
  std::vector<double> a(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    a[i * d + i] = 2.0 * m.scale + m.shift;
    if (i + 1 < d) {
      a[i * d + i + 1] = -m.scale;
      a[(i + 1) * d + i] = -m.scale;
    }
  }
  return a;
}

double dot(std::span<const double> a, std::span<const double> b) {
  require_same_size(a.size(), b.size(), "dot");
  double acc = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) acc += a[j] * b[j];
  return acc;
}

double norm_sq(std::span<const double> a) {
  double acc = 0.0;
  for (double v : a) acc += v * v;
  return acc;
}

double dist_sq(std::span<const double> a, std::span<const double> b) {
  require_same_size(a.size(), b.size(), "dist_sq");
  double acc = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double diff = a[j] - b[j];
    acc += diff * diff;
  }
  return acc;
}

}  // namespace subgradfed
