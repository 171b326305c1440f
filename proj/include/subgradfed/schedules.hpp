#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "subgradfed/linalg.hpp"

namespace subgradfed {

/// EF21-P constants for a contractive compressor with parameter alpha.
struct TheoryConstantsEF21P {
  double alpha = 1.0;
  double theta = 1.0;          // 1 - sqrt(1 - alpha)
  double lambda_star = 0.0;    // sqrt(1 - alpha) / (1 - sqrt(1 - alpha))
  double B_star = 1.0;         // 1 + 2 lambda_star
  double lyapunov_weight = 0;  // 1 / (lambda_star theta); 0 when alpha == 1

  static TheoryConstantsEF21P from_alpha(double alpha);
};

/// MARINA-P constants for unbiased compressors with variance omega and
/// full-sync probability p.
struct TheoryConstantsMarinaP {
  double omega = 0.0;
  double p = 1.0;
  double L_bar = 0.0;
  double L_tilde = 0.0;
  double lambda_star = 0.0;    // (L_bar / L_tilde) sqrt((1 - p) omega / p)
  double B_tilde_star = 0.0;   // L_bar^2 + 2 L_bar L_tilde sqrt((1 - p) omega / p)
  double lyapunov_weight = 0;  // 1 / (lambda_star p); 0 when lambda_star == 0

  static TheoryConstantsMarinaP make(double omega, double p, double L_bar, double L_tilde);
};

enum class ScheduleKind {
  ConstantOptimal,
  Decreasing,
  PolyakEF21P,
  PolyakMarinaP,
  SMBaseline,
  FixedConstant,
};

std::string_view to_string(ScheduleKind kind);
ScheduleKind schedule_kind_from_string(std::string_view name);

struct Schedule {
  ScheduleKind kind = ScheduleKind::ConstantOptimal;
  double factor = 1.0;
  std::optional<long> horizon_T;
  std::optional<double> f_star;
  std::optional<double> gamma0;
};

/// The grid {2^-9, ..., 2^7}.
std::vector<double> default_factor_grid();

/// factor * (1/sqrt(T)) * sqrt(V0 / B) -- shared by every constant-optimal
/// formula, with B = B* L0^2 (EF21-P) or B~* (MARINA-P).
double gamma_constant_from_bound(double V0, double B, long T, double factor);

double gamma_constant_ef21p(const TheoryConstantsEF21P& c, double V0, double L0, long T,
                            double factor);
double gamma_constant_marinap(const TheoryConstantsMarinaP& c, double V0, long T, double factor);

/// factor * (f_w - f*) / (B* ||g||^2); 0 at the optimum.
double gamma_polyak_ef21p(const TheoryConstantsEF21P& c, double f_w, double f_star,
                          double subgrad_norm_sq, double factor);

/// factor * gap / (||g_bar||^2 + 2 ||g_bar|| sqrt(mean ||g_i||^2) sqrt((1-p) omega / p)).
double gamma_polyak_marinap(double gap, std::span<const double> mean_subgrad,
                            const std::vector<Vector>& per_worker_subgrads, double omega, double p,
                            double factor);
/// Same formula from precomputed ||g_bar||^2 and (1/n) sum ||g_i||^2.
double gamma_polyak_marinap_from_norms(double gap, double mean_subgrad_norm_sq,
                                       double mean_worker_norm_sq, double omega, double p,
                                       double factor);

/// factor * gamma0 / sqrt(t + 1).
double gamma_decreasing(double gamma0, long t, double factor);
double optimal_gamma0_ef21p(const TheoryConstantsEF21P& c, double V0, double L0, long T);
double optimal_gamma0_marinap(const TheoryConstantsMarinaP& c, double V0, long T);

/// R0 / (L0 sqrt(T)).
double gamma_sm_baseline(double R0, double L0, long T);

}  // namespace subgradfed
