#include "subgradfed/optimizers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "subgradfed/error.hpp"

namespace subgradfed {

namespace {

constexpr std::uint64_t kServerStream = 0;

// Evaluates every worker at its own point and reduces in worker order.
template <class PointOf>
void evaluate_workers(const Problem& problem, PointOf point_of, RoundEval& eval,
                      Vector& scratch) {
  const std::size_t n = problem.n();
  const std::size_t d = problem.d();
  eval.worker_subgrads.resize(n);
  double f_sum = 0.0;
  double worker_sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    auto& g = eval.worker_subgrads[i];
    g.resize(d);
    f_sum += evaluate_worker(problem, i, point_of(i), g, scratch);
    worker_sq += norm_sq(g);
  }
  const auto nd = static_cast<double>(n);
  eval.mean_subgrad.assign(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& g = eval.worker_subgrads[i];
    for (std::size_t j = 0; j < d; ++j) eval.mean_subgrad[j] += g[j];
  }
  for (auto& v : eval.mean_subgrad) v /= nd;
  eval.f_eval = f_sum / nd;
  eval.mean_subgrad_norm_sq = norm_sq(eval.mean_subgrad);
  eval.mean_worker_norm_sq = worker_sq / nd;
}

void server_step(Vector& x, double gamma, const Vector& mean_subgrad) {
  for (std::size_t j = 0; j < x.size(); ++j) x[j] -= gamma * mean_subgrad[j];
}

double sparse_or_dense_bits(const CompressorSpec& spec, std::size_t nnz, std::size_t d) {
  const bool dense = spec.kind == CompressorKind::Identity;
  return bits_for_message(nnz, d, dense);
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string_view to_string(Method method) {
  switch (method) {
    case Method::SM:
      return "sm";
    case Method::EF21P:
      return "ef21p";
    case Method::MarinaP:
      return "marinap";
  }
  return "unknown";
}

Method method_from_string(std::string_view name) {
  if (name == "sm") return Method::SM;
  if (name == "ef21p") return Method::EF21P;
  if (name == "marinap") return Method::MarinaP;
  throw ConfigError("unknown method '" + std::string(name) + "'");
}

double bits_for_message(std::size_t nnz, std::size_t d, bool dense) {
  if (dense) return 64.0 * static_cast<double>(d);
  return static_cast<double>(nnz) * (65.0 + std::log2(static_cast<double>(d)));
}

double lyapunov_ef21p(std::span<const double> x, std::span<const double> w,
                      std::span<const double> x_star, const TheoryConstantsEF21P& c) {
  double v = dist_sq(x, x_star);
  if (c.lyapunov_weight > 0.0) v += c.lyapunov_weight * dist_sq(w, x);
  return v;
}

double lyapunov_marinap(std::span<const double> x, const std::vector<Vector>& w,
                        std::span<const double> x_star, const TheoryConstantsMarinaP& c) {
  double v = dist_sq(x, x_star);
  if (c.lyapunov_weight > 0.0 && !w.empty()) {
    double drift = 0.0;
    for (const auto& wi : w) drift += dist_sq(wi, x);
    v += c.lyapunov_weight * (drift / static_cast<double>(w.size()));
  }
  return v;
}

RunConfig normalize_run_config(const Problem& problem, RunConfig cfg) {
  const std::size_t d = problem.d();
  const std::size_t n = problem.n();
  auto& comp = cfg.compressor;
  if (cfg.method == Method::SM) comp.kind = CompressorKind::Identity;
  comp.dim = d;
  comp.n_workers = n;
  if (comp.kind == CompressorKind::Identity) {
    comp.k = d;
  } else if (comp.k == 0) {
    comp.k = std::max<std::size_t>(1, (d + n - 1) / n);
  }
  comp.validate();

  switch (cfg.method) {
    case Method::SM:
      break;
    case Method::EF21P:
      if (!comp.contractive()) {
        throw ConfigError("EF21-P needs a contractive compressor (topk, scaled_randk, identity), got " +
                          std::string(to_string(comp.kind)));
      }
      break;
    case Method::MarinaP:
      if (!comp.unbiased()) {
        throw ConfigError(
            "MARINA-P needs an unbiased compressor (same_randk, ind_randk, permk, identity), got " +
            std::string(to_string(comp.kind)));
      }
      if (!cfg.p_full) cfg.p_full = static_cast<double>(comp.k) / static_cast<double>(d);
      if (!(*cfg.p_full > 0.0 && *cfg.p_full <= 1.0)) {
        throw ConfigError("p_full must lie in (0, 1]");
      }
      break;
  }

  const auto kind = cfg.schedule.kind;
  if (kind == ScheduleKind::PolyakMarinaP && cfg.method != Method::MarinaP) {
    throw ConfigError("polyak_marinap is only defined for MARINA-P");
  }
  if (kind == ScheduleKind::PolyakEF21P && cfg.method == Method::MarinaP) {
    throw ConfigError("polyak_ef21p is not defined for MARINA-P; use polyak_marinap");
  }
  if (kind == ScheduleKind::FixedConstant && !cfg.schedule.gamma0) {
    throw ConfigError("fixed_constant needs gamma0");
  }
  if (!(cfg.schedule.factor > 0.0) || !std::isfinite(cfg.schedule.factor)) {
    throw ConfigError("schedule factor must be positive and finite");
  }
  if (cfg.max_rounds < 0) throw ConfigError("max_rounds must be >= 0");
  if (cfg.log_every < 1) throw ConfigError("log_every must be >= 1");
  if (!(cfg.bit_budget_per_worker > 0.0)) {
    throw ConfigError("bit_budget_per_worker must be positive");
  }
  return cfg;
}

double expected_bits_per_round(const Problem& problem, const RunConfig& cfg) {
  const std::size_t d = problem.d();
  const double dense = bits_for_message(d, d, true);
  const auto& comp = cfg.compressor;
  const double compressed = comp.kind == CompressorKind::Identity
                                ? dense
                                : bits_for_message(comp.k, d, false);
  switch (cfg.method) {
    case Method::SM:
      return dense;
    case Method::EF21P:
      return compressed;
    case Method::MarinaP: {
      const double p = cfg.p_full.value_or(1.0);
      return p * dense + (1.0 - p) * compressed;
    }
  }
  return dense;
}

long planning_horizon(const Problem& problem, const RunConfig& cfg) {
  if (cfg.schedule.horizon_T) return std::max(1L, *cfg.schedule.horizon_T);
  if (std::isfinite(cfg.bit_budget_per_worker)) {
    const double rounds = std::floor(cfg.bit_budget_per_worker / expected_bits_per_round(problem, cfg));
    return std::max(1L, static_cast<long>(rounds));
  }
  return std::max(1L, cfg.max_rounds);
}

StepsizeRule::StepsizeRule(const Problem& problem, const RunConfig& cfg)
    : kind_(cfg.schedule.kind),
      factor_(cfg.schedule.factor),
      f_star_(cfg.schedule.f_star.value_or(problem.f_star())) {
  const auto& k = problem.constants();
  const double V0 = k.R0_sq;
  const long T = planning_horizon(problem, cfg);
  const bool marina = cfg.method == Method::MarinaP;

  if (cfg.method == Method::EF21P) {
    ef21p_ = TheoryConstantsEF21P::from_alpha(cfg.compressor.alpha());
  } else {
    ef21p_ = TheoryConstantsEF21P::from_alpha(1.0);
  }
  if (marina) {
    marinap_ = TheoryConstantsMarinaP::make(cfg.compressor.omega(), cfg.p_full.value_or(1.0),
                                            k.L_bar, k.L_tilde);
  }

  switch (kind_) {
    case ScheduleKind::ConstantOptimal:
      gamma_ = marina ? gamma_constant_marinap(marinap_, V0, T, factor_)
                      : gamma_constant_ef21p(ef21p_, V0, k.L0, T, factor_);
      break;
    case ScheduleKind::SMBaseline:
      gamma_ = factor_ * gamma_sm_baseline(std::sqrt(V0), k.L0, T);
      break;
    case ScheduleKind::FixedConstant:
      gamma_ = factor_ * cfg.schedule.gamma0.value();
      break;
    case ScheduleKind::Decreasing:
      if (cfg.schedule.gamma0) {
        gamma0_ = *cfg.schedule.gamma0;
      } else {
        gamma0_ = marina ? optimal_gamma0_marinap(marinap_, V0, T)
                         : optimal_gamma0_ef21p(ef21p_, V0, k.L0, T);
      }
      break;
    case ScheduleKind::PolyakEF21P:
    case ScheduleKind::PolyakMarinaP:
      if (!std::isfinite(f_star_)) throw ConfigError("Polyak schedules need a finite f_star");
      break;
  }
}

double StepsizeRule::operator()(long t, const RoundEval& eval) const {
  switch (kind_) {
    case ScheduleKind::ConstantOptimal:
    case ScheduleKind::SMBaseline:
    case ScheduleKind::FixedConstant:
      return gamma_;
    case ScheduleKind::Decreasing:
      return gamma_decreasing(gamma0_, t, factor_);
    case ScheduleKind::PolyakEF21P:
      return gamma_polyak_ef21p(ef21p_, eval.f_eval, f_star_, eval.mean_subgrad_norm_sq,
                                factor_);
    case ScheduleKind::PolyakMarinaP:
      return gamma_polyak_marinap_from_norms(eval.f_eval - f_star_, eval.mean_subgrad_norm_sq,
                                             eval.mean_worker_norm_sq, marinap_.omega, marinap_.p,
                                             factor_);
  }
  return 0.0;
}

// --- SM ---------------------------------------------------------------------

SmSimulator::SmSimulator(const Problem& problem)
    : problem_(&problem), x_(problem.x0()), scratch_(problem.d()) {}

const RoundEval& SmSimulator::evaluate() {
  evaluate_workers(*problem_, [this](std::size_t) -> std::span<const double> { return x_; },
                   eval_, scratch_);
  return eval_;
}

StepOutcome SmSimulator::step(double gamma) {
  server_step(x_, gamma, eval_.mean_subgrad);
  ++t_;
  return {bits_for_message(problem_->d(), problem_->d(), true), true};
}

// --- EF21-P -----------------------------------------------------------------

Ef21pSimulator::Ef21pSimulator(const Problem& problem, const CompressorSpec& compressor,
                               std::uint64_t seed)
    : problem_(&problem),
      compressor_(compressor),
      server_rng_(mix_seed(seed, kServerStream)),
      x_(problem.x0()),
      w_(problem.x0()),
      worker_w_(problem.n(), problem.x0()),
      scratch_(problem.d()),
      diff_(problem.d()) {
  if (!compressor_.contractive()) throw ConfigError("EF21-P needs a contractive compressor");
}

void Ef21pSimulator::reseed(std::uint64_t seed) { server_rng_ = Rng(mix_seed(seed, kServerStream)); }

void Ef21pSimulator::set_state(const Vector& x, const Vector& w) {
  if (x.size() != problem_->d() || w.size() != problem_->d()) {
    throw DimensionError("Ef21pSimulator::set_state: size mismatch");
  }
  x_ = x;
  w_ = w;
  for (auto& copy : worker_w_) copy = w;
}

const RoundEval& Ef21pSimulator::evaluate() {
  evaluate_workers(
      *problem_, [this](std::size_t i) -> std::span<const double> { return worker_w_[i]; }, eval_,
      scratch_);
  return eval_;
}

StepOutcome Ef21pSimulator::step(double gamma) {
  const std::size_t d = problem_->d();
  server_step(x_, gamma, eval_.mean_subgrad);
  for (std::size_t j = 0; j < d; ++j) diff_[j] = x_[j] - w_[j];
  const CompressedVector delta = compress_one(compressor_, diff_, server_rng_);
  // Selection compressors move every kept coordinate of w onto x^{t+1}, so
  // the broadcast carries those coordinates and all copies stay bitwise equal.
  std::vector<double> payload(delta.nnz());
  for (std::size_t j = 0; j < delta.nnz(); ++j) payload[j] = x_[delta.indices[j]];
  for (std::size_t j = 0; j < delta.nnz(); ++j) w_[delta.indices[j]] = payload[j];
  for (auto& copy : worker_w_) {
    for (std::size_t j = 0; j < delta.nnz(); ++j) copy[delta.indices[j]] = payload[j];
  }
  ++t_;
  return {sparse_or_dense_bits(compressor_, delta.nnz(), d), false};
}

// --- MARINA-P ---------------------------------------------------------------

MarinaPSimulator::MarinaPSimulator(const Problem& problem, const CompressorSpec& compressor,
                                   double p_full, std::uint64_t seed)
    : problem_(&problem),
      compressor_(compressor),
      p_full_(p_full),
      server_rng_(mix_seed(seed, kServerStream)),
      x_(problem.x0()),
      w_(problem.n(), problem.x0()),
      scratch_(problem.d()),
      delta_(problem.d()) {
  if (!compressor_.unbiased()) throw ConfigError("MARINA-P needs an unbiased compressor");
  if (!(p_full > 0.0 && p_full <= 1.0)) throw ConfigError("p_full must lie in (0, 1]");
  reseed(seed);
}

void MarinaPSimulator::reseed(std::uint64_t seed) {
  server_rng_ = Rng(mix_seed(seed, kServerStream));
  worker_rngs_.clear();
  for (std::size_t i = 0; i < problem_->n(); ++i) worker_rngs_.emplace_back(mix_seed(seed, i + 1));
}

void MarinaPSimulator::set_state(const Vector& x, const std::vector<Vector>& w) {
  if (x.size() != problem_->d() || w.size() != problem_->n()) {
    throw DimensionError("MarinaPSimulator::set_state: size mismatch");
  }
  for (const auto& wi : w) {
    if (wi.size() != problem_->d()) throw DimensionError("MarinaPSimulator::set_state: size mismatch");
  }
  x_ = x;
  w_ = w;
}

const RoundEval& MarinaPSimulator::evaluate() {
  evaluate_workers(*problem_, [this](std::size_t i) -> std::span<const double> { return w_[i]; },
                   eval_, scratch_);
  return eval_;
}

StepOutcome MarinaPSimulator::step(double gamma) {
  const std::size_t d = problem_->d();
  delta_ = x_;
  server_step(x_, gamma, eval_.mean_subgrad);
  for (std::size_t j = 0; j < d; ++j) delta_[j] = x_[j] - delta_[j];
  ++t_;
  if (server_rng_.bernoulli(p_full_)) {
    for (auto& wi : w_) wi = x_;
    return {bits_for_message(d, d, true), true};
  }
  const auto messages = compress_batch(compressor_, delta_, server_rng_, worker_rngs_);
  double bits = 0.0;
  for (std::size_t i = 0; i < w_.size(); ++i) {
    messages[i].add_to(w_[i]);
    bits += sparse_or_dense_bits(compressor_, messages[i].nnz(), d);
  }
  return {bits / static_cast<double>(w_.size()), false};
}

// --- run loop ---------------------------------------------------------------

namespace {

// Running sums for the ergodic averages of the evaluation points.
class ErgodicAverage {
 public:
  ErgodicAverage(std::size_t copies, std::size_t d) : sums_(copies, Vector(d, 0.0)) {}

  void add(const std::vector<const Vector*>& points, double weight) {
    for (std::size_t c = 0; c < sums_.size(); ++c) {
      const Vector& p = *points[c];
      for (std::size_t j = 0; j < p.size(); ++j) sums_[c][j] += weight * p[j];
    }
    total_ += weight;
  }

  bool empty() const { return !(total_ > 0.0); }

  // (1/n) sum_i f_i(avg_i), or f(avg) when a single shared point is tracked.
  double f_at_average(const Problem& problem) const {
    Vector avg(problem.d());
    if (sums_.size() == 1) {
      for (std::size_t j = 0; j < avg.size(); ++j) avg[j] = sums_[0][j] / total_;
      return f_value(problem, avg);
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < sums_.size(); ++i) {
      for (std::size_t j = 0; j < avg.size(); ++j) avg[j] = sums_[i][j] / total_;
      acc += f_i_value(problem, i, avg);
    }
    return acc / static_cast<double>(sums_.size());
  }

 private:
  std::vector<Vector> sums_;
  double total_ = 0.0;
};

// Per-method hooks used by the generic loop.
struct SmHooks {
  SmSimulator sim;
  TheoryConstantsEF21P constants;
  double f_at_x(const Problem&, const RoundEval& e) const { return e.f_eval; }
  double lyapunov(const Problem& p) const { return dist_sq(sim.x(), p.x_star()); }
  std::vector<const Vector*> points() const { return {&sim.x()}; }
  std::size_t average_copies() const { return 1; }
  static constexpr bool reports_full_round = false;
};

struct Ef21pHooks {
  Ef21pSimulator sim;
  TheoryConstantsEF21P constants;
  double f_at_x(const Problem& p, const RoundEval&) const { return f_value(p, sim.x()); }
  double lyapunov(const Problem& p) const {
    return lyapunov_ef21p(sim.x(), sim.w(), p.x_star(), constants);
  }
  std::vector<const Vector*> points() const { return {&sim.w()}; }
  std::size_t average_copies() const { return 1; }
  static constexpr bool reports_full_round = false;
};

struct MarinaPHooks {
  MarinaPSimulator sim;
  TheoryConstantsMarinaP constants;
  double f_at_x(const Problem& p, const RoundEval&) const { return f_value(p, sim.x()); }
  double lyapunov(const Problem& p) const {
    return lyapunov_marinap(sim.x(), sim.w(), p.x_star(), constants);
  }
  std::vector<const Vector*> points() const {
    std::vector<const Vector*> out;
    for (const auto& wi : sim.w()) out.push_back(&wi);
    return out;
  }
  std::size_t average_copies() const { return sim.w().size(); }
  static constexpr bool reports_full_round = true;
};

template <class Hooks>
MetricsLog drive(const Problem& problem, const RunConfig& cfg, const StepsizeRule& rule,
                 Hooks& hooks) {
  MetricsLog log;
  log.has_average_column = cfg.track_average;
  ErgodicAverage average(hooks.average_copies(), problem.d());
  const bool weight_by_gamma = cfg.schedule.kind == ScheduleKind::Decreasing;
  const double f_star = problem.f_star();

  double bits = 0.0;
  double best = std::numeric_limits<double>::infinity();
  std::optional<bool> last_full;
  for (long t = 0;; ++t) {
    const RoundEval& eval = hooks.sim.evaluate();
    const double gap = eval.f_eval - f_star;
    const bool finite = std::isfinite(gap);
    const bool terminal =
        !finite || t >= cfg.max_rounds || bits >= cfg.bit_budget_per_worker;
    const double gamma = finite ? rule(t, eval) : std::numeric_limits<double>::quiet_NaN();
    best = std::min(best, gap);

    if (terminal || t % cfg.log_every == 0) {
      MetricsRow row;
      row.t = t;
      row.gamma = gamma;
      row.f_subopt_w = gap;
      row.f_subopt_x = hooks.f_at_x(problem, eval) - f_star;
      row.bits_per_worker = bits;
      if (cfg.log_lyapunov) row.lyapunov = hooks.lyapunov(problem);
      if (Hooks::reports_full_round) row.full_round = last_full;
      if (cfg.track_average && !average.empty()) {
        row.f_subopt_avg = average.f_at_average(problem) - f_star;
      }
      row.best_f_subopt_w = best;
      log.rows.push_back(row);
    }
    if (!finite) {
      log.diverged = true;
      log.diverged_round = t;
      break;
    }
    if (terminal) break;

    if (cfg.track_average) average.add(hooks.points(), weight_by_gamma ? gamma : 1.0);
    const StepOutcome outcome = hooks.sim.step(gamma);
    bits += outcome.bits_per_worker;
    if (Hooks::reports_full_round) last_full = outcome.full_round;
    log.rounds = t + 1;
  }
  return log;
}

}  // namespace

MetricsLog run_sm(const Problem& problem, const RunConfig& raw) {
  if (raw.method != Method::SM) throw ConfigError("run_sm needs method = sm");
  const RunConfig cfg = normalize_run_config(problem, raw);
  const StepsizeRule rule(problem, cfg);
  SmHooks hooks{SmSimulator(problem), rule.ef21p_constants()};
  return drive(problem, cfg, rule, hooks);
}

MetricsLog run_ef21p(const Problem& problem, const RunConfig& raw) {
  if (raw.method != Method::EF21P) throw ConfigError("run_ef21p needs method = ef21p");
  const RunConfig cfg = normalize_run_config(problem, raw);
  const StepsizeRule rule(problem, cfg);
  Ef21pHooks hooks{Ef21pSimulator(problem, cfg.compressor, cfg.seed), rule.ef21p_constants()};
  return drive(problem, cfg, rule, hooks);
}

MetricsLog run_marinap(const Problem& problem, const RunConfig& raw) {
  if (raw.method != Method::MarinaP) throw ConfigError("run_marinap needs method = marinap");
  const RunConfig cfg = normalize_run_config(problem, raw);
  const StepsizeRule rule(problem, cfg);
  MarinaPHooks hooks{MarinaPSimulator(problem, cfg.compressor, *cfg.p_full, cfg.seed),
                     rule.marinap_constants()};
  return drive(problem, cfg, rule, hooks);
}

MetricsLog run(const Problem& problem, const RunConfig& cfg) {
  switch (cfg.method) {
    case Method::SM:
      return run_sm(problem, cfg);
    case Method::EF21P:
      return run_ef21p(problem, cfg);
    case Method::MarinaP:
      return run_marinap(problem, cfg);
  }
  throw ConfigError("unknown method");
}

void write_metrics_csv(const MetricsLog& log, std::ostream& out) {
  out << "round,gamma,f_subopt_w,f_subopt_x,bits_per_worker,lyapunov,full_round";
  if (log.has_average_column) out << ",f_subopt_avg";
  out << '\n';
  for (const auto& row : log.rows) {
    out << row.t << ',' << format_double(row.gamma) << ',' << format_double(row.f_subopt_w) << ','
        << format_double(row.f_subopt_x) << ',' << format_double(row.bits_per_worker) << ',';
    if (row.lyapunov) out << format_double(*row.lyapunov);
    out << ',';
    if (row.full_round) out << (*row.full_round ? '1' : '0');
    if (log.has_average_column) {
      out << ',';
      if (row.f_subopt_avg) out << format_double(*row.f_subopt_avg);
    }
    out << '\n';
  }
}

void write_metrics_csv(const MetricsLog& log, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_metrics_csv(log, out);
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace subgradfed
