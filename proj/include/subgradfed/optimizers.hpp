#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string_view>
#include <vector>

#include "subgradfed/compressors.hpp"
#include "subgradfed/linalg.hpp"
#include "subgradfed/problem.hpp"
#include "subgradfed/rng.hpp"
#include "subgradfed/schedules.hpp"

namespace subgradfed {

enum class Method { SM, EF21P, MarinaP };

std::string_view to_string(Method method);
Method method_from_string(std::string_view name);

struct RunConfig {
  Method method = Method::SM;
  /// dim and n_workers are taken from the problem; k == 0 means ceil(d / n).
  CompressorSpec compressor{CompressorKind::Identity, 0, 0, 0};
  Schedule schedule;
  /// MARINA-P full-sync probability; defaults to k / d.
  std::optional<double> p_full;
  long max_rounds = 1000;
  double bit_budget_per_worker = std::numeric_limits<double>::infinity();
  std::uint64_t seed = 0;
  bool log_lyapunov = false;
  long log_every = 1;
  /// Adds an f_subopt_avg column: suboptimality at the ergodic average
  /// (gamma-weighted for decreasing schedules, uniform otherwise).
  bool track_average = false;
};

/// Fills problem-dependent compressor fields and defaults, then validates
/// method/compressor/schedule compatibility. Throws ConfigError.
RunConfig normalize_run_config(const Problem& problem, RunConfig cfg);

/// One logged state. Row t describes the state reached after t rounds.
struct MetricsRow {
  long t = 0;
  double gamma = 0.0;  // stepsize the schedule prescribes at this state
  double f_subopt_w = 0.0;
  double f_subopt_x = 0.0;
  double bits_per_worker = 0.0;  // cumulative bits sent to reach this state
  std::optional<double> lyapunov;
  std::optional<bool> full_round;  // MARINA-P: whether this state came from a full sync
  std::optional<double> f_subopt_avg;
  double best_f_subopt_w = 0.0;  // min over every round <= t, logged or not
};

struct MetricsLog {
  std::vector<MetricsRow> rows;
  long rounds = 0;  // steps executed
  bool diverged = false;
  long diverged_round = -1;
  bool has_average_column = false;

  const MetricsRow& final_row() const { return rows.back(); }
};

void write_metrics_csv(const MetricsLog& log, std::ostream& out);
void write_metrics_csv(const MetricsLog& log, const std::filesystem::path& path);

/// Dense messages cost 64 d bits; sparse ones nnz (65 + log2 d).
double bits_for_message(std::size_t nnz, std::size_t d, bool dense);

double lyapunov_ef21p(std::span<const double> x, std::span<const double> w,
                      std::span<const double> x_star, const TheoryConstantsEF21P& c);
double lyapunov_marinap(std::span<const double> x, const std::vector<Vector>& w,
                        std::span<const double> x_star, const TheoryConstantsMarinaP& c);

/// Server-side view of one round of worker evaluations.
struct RoundEval {
  double f_eval = 0.0;  // f(w) for EF21-P/SM, (1/n) sum f_i(w_i) for MARINA-P
  Vector mean_subgrad;     // (1/n) sum g_i, reduced in worker order
  double mean_subgrad_norm_sq = 0.0;
  double mean_worker_norm_sq = 0.0;  // (1/n) sum ||g_i||^2
  std::vector<Vector> worker_subgrads;
};

struct StepOutcome {
  double bits_per_worker = 0.0;
  bool full_round = false;
};

/// Distributed subgradient method: uncompressed broadcast of x.
class SmSimulator {
 public:
  explicit SmSimulator(const Problem& problem);

  const RoundEval& evaluate();
  StepOutcome step(double gamma);

  const Vector& x() const { return x_; }
  long round() const { return t_; }

 private:
  const Problem* problem_;
  Vector x_;
  RoundEval eval_;
  Vector scratch_;
  long t_ = 0;
};

/// EF21-P: the server keeps x and the shared shift w; every worker keeps
/// its own copy of w, updated only from the broadcast message.
class Ef21pSimulator {
 public:
  Ef21pSimulator(const Problem& problem, const CompressorSpec& compressor, std::uint64_t seed);

  const RoundEval& evaluate();
  StepOutcome step(double gamma);
  void reseed(std::uint64_t seed);

  const Vector& x() const { return x_; }
  const Vector& w() const { return w_; }
  const Vector& worker_w(std::size_t i) const { return worker_w_[i]; }
  long round() const { return t_; }
  /// Overrides the state (x, w) on the server and all workers.
  void set_state(const Vector& x, const Vector& w);

 private:
  const Problem* problem_;
  CompressorSpec compressor_;
  Rng server_rng_;
  Vector x_;
  Vector w_;
  std::vector<Vector> worker_w_;
  RoundEval eval_;
  Vector scratch_;
  Vector diff_;
  long t_ = 0;
};

/// MARINA-P: per-worker shifts w_i, Bernoulli(p) full syncs, otherwise
/// worker-specific compressed model differences.
class MarinaPSimulator {
 public:
  MarinaPSimulator(const Problem& problem, const CompressorSpec& compressor, double p_full,
                   std::uint64_t seed);

  const RoundEval& evaluate();
  StepOutcome step(double gamma);
  void reseed(std::uint64_t seed);

  const Vector& x() const { return x_; }
  const std::vector<Vector>& w() const { return w_; }
  double p_full() const { return p_full_; }
  long round() const { return t_; }
  void set_state(const Vector& x, const std::vector<Vector>& w);

 private:
  const Problem* problem_;
  CompressorSpec compressor_;
  double p_full_;
  Rng server_rng_;
  std::vector<Rng> worker_rngs_;
  Vector x_;
  std::vector<Vector> w_;
  RoundEval eval_;
  Vector scratch_;
  Vector delta_;
  long t_ = 0;
};

/// Number of rounds the stepsize formulas plan for: schedule.horizon_T if
/// given, else budget / expected bits per round when a budget is set,
/// else max_rounds.
long planning_horizon(const Problem& problem, const RunConfig& cfg);
double expected_bits_per_round(const Problem& problem, const RunConfig& cfg);

/// A schedule bound to one method's theory constants.
class StepsizeRule {
 public:
  StepsizeRule(const Problem& problem, const RunConfig& cfg);

  double operator()(long t, const RoundEval& eval) const;

  const TheoryConstantsEF21P& ef21p_constants() const { return ef21p_; }
  const TheoryConstantsMarinaP& marinap_constants() const { return marinap_; }

 private:
  ScheduleKind kind_;
  double factor_;
  double f_star_;
  double gamma_ = 0.0;   // constant kinds
  double gamma0_ = 0.0;  // decreasing
  TheoryConstantsEF21P ef21p_;
  TheoryConstantsMarinaP marinap_;
};

MetricsLog run_sm(const Problem& problem, const RunConfig& cfg);
MetricsLog run_ef21p(const Problem& problem, const RunConfig& cfg);
MetricsLog run_marinap(const Problem& problem, const RunConfig& cfg);
/// Dispatches on cfg.method after normalization.
MetricsLog run(const Problem& problem, const RunConfig& cfg);

}  // namespace subgradfed
