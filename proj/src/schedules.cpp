#include "subgradfed/schedules.hpp"

#include <cmath>
#include <string>

#include "subgradfed/error.hpp"

namespace subgradfed {

namespace {

struct ScheduleName {
  ScheduleKind kind;
  std::string_view name;
};

constexpr ScheduleName kScheduleNames[] = {
    {ScheduleKind::ConstantOptimal, "constant_optimal"},
    {ScheduleKind::Decreasing, "decreasing"},
    {ScheduleKind::PolyakEF21P, "polyak_ef21p"},
    {ScheduleKind::PolyakMarinaP, "polyak_marinap"},
    {ScheduleKind::SMBaseline, "sm_baseline"},
    {ScheduleKind::FixedConstant, "fixed_constant"},
};

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw ConfigError(std::string(name) + " must be positive and finite");
  }
}

void require_horizon(long T) {
  if (T < 1) throw ConfigError("horizon T must be >= 1");
}

double compression_ratio_term(double omega, double p) {
  return std::sqrt((1.0 - p) * omega / p);
}

}  // namespace

TheoryConstantsEF21P TheoryConstantsEF21P::from_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in (0, 1]");
  TheoryConstantsEF21P c;
  c.alpha = alpha;
  const double root = std::sqrt(1.0 - alpha);
  c.theta = 1.0 - root;
  c.lambda_star = root / c.theta;
  c.B_star = 1.0 + 2.0 * root / (1.0 - root);
  c.lyapunov_weight = c.lambda_star > 0.0 ? 1.0 / (c.lambda_star * c.theta) : 0.0;
  return c;
}

TheoryConstantsMarinaP TheoryConstantsMarinaP::make(double omega, double p, double L_bar,
                                                    double L_tilde) {
  if (!(omega >= 0.0) || !std::isfinite(omega)) throw ConfigError("omega must be >= 0");
  if (!(p > 0.0 && p <= 1.0)) throw ConfigError("p must lie in (0, 1]");
  require_positive(L_bar, "L_bar");
  require_positive(L_tilde, "L_tilde");
  TheoryConstantsMarinaP c;
  c.omega = omega;
  c.p = p;
  c.L_bar = L_bar;
  c.L_tilde = L_tilde;
  const double ratio = compression_ratio_term(omega, p);
  c.lambda_star = (L_bar / L_tilde) * ratio;
  c.B_tilde_star = L_bar * L_bar + 2.0 * L_bar * L_tilde * ratio;
  c.lyapunov_weight = c.lambda_star > 0.0 ? 1.0 / (c.lambda_star * p) : 0.0;
  return c;
}

std::string_view to_string(ScheduleKind kind) {
  for (const auto& entry : kScheduleNames) {
    if (entry.kind == kind) return entry.name;
  }
  return "unknown";
}

ScheduleKind schedule_kind_from_string(std::string_view name) {
  for (const auto& entry : kScheduleNames) {
    if (entry.name == name) return entry.kind;
  }
  throw ConfigError("unknown schedule kind '" + std::string(name) + "'");
}

std::vector<double> default_factor_grid() {
  std::vector<double> grid;
  for (int e = -9; e <= 7; ++e) grid.push_back(std::ldexp(1.0, e));
  return grid;
}

double gamma_constant_from_bound(double V0, double B, long T, double factor) {
  require_positive(V0, "V0");
  require_positive(B, "stepsize bound constant");
  require_horizon(T);
  return factor * (1.0 / std::sqrt(static_cast<double>(T))) * std::sqrt(V0 / B);
}

double gamma_constant_ef21p(const TheoryConstantsEF21P& c, double V0, double L0, long T,
                            double factor) {
  require_positive(L0, "L0");
  return gamma_constant_from_bound(V0, c.B_star * (L0 * L0), T, factor);
}

double gamma_constant_marinap(const TheoryConstantsMarinaP& c, double V0, long T, double factor) {
  return gamma_constant_from_bound(V0, c.B_tilde_star, T, factor);
}

double gamma_polyak_ef21p(const TheoryConstantsEF21P& c, double f_w, double f_star,
                          double subgrad_norm_sq, double factor) {
  const double gap = f_w - f_star;
  if (gap < 0.0) {
    throw DegenerateOracleError("Polyak stepsize: f(w) is below the supplied f*");
  }
  if (gap == 0.0) return 0.0;
  if (!(subgrad_norm_sq > 0.0)) {
    throw DegenerateOracleError("Polyak stepsize: zero subgradient away from the optimum");
  }
  return factor * (gap / (c.B_star * subgrad_norm_sq));
}

double gamma_polyak_marinap_from_norms(double gap, double mean_subgrad_norm_sq,
                                       double mean_worker_norm_sq, double omega, double p,
                                       double factor) {
  if (gap < 0.0) {
    throw DegenerateOracleError("Polyak stepsize: averaged f(w_i) is below the supplied f*");
  }
  if (gap == 0.0) return 0.0;
  if (!(mean_subgrad_norm_sq > 0.0)) {
    throw DegenerateOracleError("Polyak stepsize: zero mean subgradient away from the optimum");
  }
  if (!(p > 0.0 && p <= 1.0)) throw ConfigError("p must lie in (0, 1]");
  const double denom =
      mean_subgrad_norm_sq + 2.0 * std::sqrt(mean_subgrad_norm_sq) *
                                 std::sqrt(mean_worker_norm_sq) * compression_ratio_term(omega, p);
  return factor * (gap / denom);
}

double gamma_polyak_marinap(double gap, std::span<const double> mean_subgrad,
                            const std::vector<Vector>& per_worker_subgrads, double omega, double p,
                            double factor) {
  if (per_worker_subgrads.empty()) throw ConfigError("need at least one worker subgradient");
  double worker_sq = 0.0;
  for (const auto& g : per_worker_subgrads) {
    if (g.size() != mean_subgrad.size()) throw DimensionError("subgradient size mismatch");
    worker_sq += norm_sq(g);
  }
  worker_sq /= static_cast<double>(per_worker_subgrads.size());
  return gamma_polyak_marinap_from_norms(gap, norm_sq(mean_subgrad), worker_sq, omega, p, factor);
}

double gamma_decreasing(double gamma0, long t, double factor) {
  require_positive(gamma0, "gamma0");
  if (t < 0) throw ConfigError("round index must be >= 0");
  return factor * gamma0 / std::sqrt(static_cast<double>(t) + 1.0);
}

double optimal_gamma0_ef21p(const TheoryConstantsEF21P& c, double V0, double L0, long T) {
  require_positive(V0, "V0");
  require_positive(L0, "L0");
  require_horizon(T);
  return std::sqrt(V0 / (2.0 * c.B_star * L0 * L0 * std::log(static_cast<double>(T) + 1.0)));
}

double optimal_gamma0_marinap(const TheoryConstantsMarinaP& c, double V0, long T) {
  require_positive(V0, "V0");
  require_horizon(T);
  return std::sqrt(V0 / (2.0 * c.B_tilde_star * std::log(static_cast<double>(T) + 1.0)));
}

double gamma_sm_baseline(double R0, double L0, long T) {
  require_positive(R0, "R0");
  require_positive(L0, "L0");
  require_horizon(T);
  return R0 / (L0 * std::sqrt(static_cast<double>(T)));
}

}  // namespace subgradfed
