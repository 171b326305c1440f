#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace subgradfed {

using Vector = std::vector<double>;

/// A = scale * P + shift * I, where P = tridiag(-1, 2, -1) of size dim.
/// Only the three scalars are stored; the matrix is never materialized
/// outside of test helpers.
struct SymTridiagMatrix {
  std::size_t dim = 1;
  double scale = 0.0;
  double shift = 0.0;

  SymTridiagMatrix() = default;
  SymTridiagMatrix(std::size_t dim, double scale, double shift);
};

struct EigExtremes {
  double lambda_min;
  double lambda_max;
  double spectral_norm;
};

/// y = A x in O(d). Throws DimensionError on size mismatch.
Vector matvec(const SymTridiagMatrix& m, std::span<const double> x);
void matvec_into(const SymTridiagMatrix& m, std::span<const double> x, std::span<double> out);

/// Eigenvalues of P are 4 sin^2(k pi / (2(d+1))), k = 1..d, so the
/// extremes of A come from k = 1 and k = d (order flips when scale < 0).
EigExtremes eig_extremes(const SymTridiagMatrix& m);

/// Row-major dense copy of A. Test-oracle helper; refuses dim > 64.
std::vector<double> materialize_dense(const SymTridiagMatrix& m);

double dot(std::span<const double> a, std::span<const double> b);
double norm_sq(std::span<const double> a);
double dist_sq(std::span<const double> a, std::span<const double> b);

}  // namespace subgradfed
