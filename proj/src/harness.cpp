#include "subgradfed/harness.hpp"

#include <atomic>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include "subgradfed/error.hpp"
#include "subgradfed/rng.hpp"

namespace subgradfed {

namespace {

std::string format_short(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

nlohmann::json finite_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

FactorSummary summarize(double factor, const MetricsLog& log) {
  FactorSummary s;
  s.factor = factor;
  s.rounds = log.rounds;
  s.diverged = log.diverged;
  if (!log.rows.empty()) {
    s.final_bits = log.final_row().bits_per_worker;
    s.final_subopt = log.diverged ? std::numeric_limits<double>::quiet_NaN()
                                  : log.final_row().f_subopt_w;
  } else {
    s.final_subopt = std::numeric_limits<double>::quiet_NaN();
  }
  return s;
}

}  // namespace

std::string MethodConfig::label() const {
  std::string out(to_string(method));
  out += '_';
  out += to_string(compressor);
  out += '_';
  out += to_string(schedule);
  return out;
}

std::vector<MethodConfig> ExperimentMatrix::default_methods() {
  std::vector<MethodConfig> out;
  const std::pair<Method, CompressorKind> configs[] = {
      {Method::EF21P, CompressorKind::TopK},
      {Method::MarinaP, CompressorKind::SameRandK},
      {Method::MarinaP, CompressorKind::IndRandK},
      {Method::MarinaP, CompressorKind::PermK},
  };
  for (const auto& [method, comp] : configs) {
    out.push_back({method, comp, ScheduleKind::ConstantOptimal});
    out.push_back({method, comp,
                   method == Method::MarinaP ? ScheduleKind::PolyakMarinaP
                                             : ScheduleKind::PolyakEF21P});
  }
  return out;
}

ExperimentMatrix ExperimentMatrix::desk() {
  ExperimentMatrix m;
  m.dims = {200};
  m.node_counts = {10};
  m.noise_scales = {0.1, 1.0};
  m.methods = default_methods();
  m.budgets = {{10, 1e7}};
  return m;
}

ExperimentMatrix ExperimentMatrix::full() {
  ExperimentMatrix m;
  m.dims = {1000};
  m.node_counts = {10, 100};
  m.noise_scales = {0.1, 1.0, 10.0};
  m.methods = default_methods();
  m.budgets = {{10, 3.5e8}, {100, 3.5e7}};
  m.log_every = 10;
  return m;
}

void ExperimentMatrix::validate() const {
  if (dims.empty() || node_counts.empty() || noise_scales.empty() || methods.empty() ||
      seeds.empty()) {
    throw ConfigError("matrix: dims, node_counts, noise_scales, methods and seeds must be nonempty");
  }
  if (factor_grid.empty()) throw ConfigError("matrix: factor_grid must be nonempty");
  for (double f : factor_grid) {
    if (!(f > 0.0) || !std::isfinite(f)) throw ConfigError("matrix: factors must be positive");
  }
  for (std::size_t n : node_counts) {
    if (n == 0) throw ConfigError("matrix: node counts must be >= 1");
    auto it = budgets.find(n);
    if (it == budgets.end()) {
      throw ConfigError("matrix: no budget for n=" + std::to_string(n));
    }
    if (!(it->second > 0.0)) throw ConfigError("matrix: budgets must be positive");
    for (std::size_t d : dims) {
      if (d == 0 || d % n != 0) {
        throw ConfigError("matrix: d=" + std::to_string(d) + " is not a multiple of n=" +
                          std::to_string(n));
      }
    }
  }
  for (double s : noise_scales) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw ConfigError("matrix: noise scales must be >= 0");
  }
  if (!(mu > 0.0)) throw ConfigError("matrix: mu must be positive");
  if (max_rounds < 1) throw ConfigError("matrix: max_rounds must be >= 1");
  if (log_every < 1) throw ConfigError("matrix: log_every must be >= 1");
}

nlohmann::json matrix_to_json(const ExperimentMatrix& m) {
  nlohmann::json j;
  j["dims"] = m.dims;
  j["node_counts"] = m.node_counts;
  j["noise_scales"] = m.noise_scales;
  auto methods = nlohmann::json::array();
  for (const auto& mc : m.methods) {
    methods.push_back({{"method", std::string(to_string(mc.method))},
                       {"compressor", std::string(to_string(mc.compressor))},
                       {"schedule", std::string(to_string(mc.schedule))}});
  }
  j["methods"] = methods;
  j["factor_grid"] = m.factor_grid;
  auto budgets = nlohmann::json::object();
  for (const auto& [n, b] : m.budgets) budgets[std::to_string(n)] = b;
  j["budgets"] = budgets;
  j["seeds"] = m.seeds;
  j["mu"] = m.mu;
  j["max_rounds"] = m.max_rounds;
  j["log_every"] = m.log_every;
  return j;
}

TuneResult tune(const Problem& problem, const RunConfig& base_cfg,
                const std::vector<double>& factor_grid, unsigned threads) {
  if (factor_grid.empty()) throw ConfigError("tune: factor grid is empty");
  // Surface configuration errors once, before spawning anything.
  normalize_run_config(problem, base_cfg);

  const std::size_t m = factor_grid.size();
  std::vector<MetricsLog> logs(m);
  std::vector<FactorSummary> summaries(m);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next++; i < m; i = next++) {
      RunConfig cfg = base_cfg;
      cfg.schedule.factor = factor_grid[i];
      try {
        logs[i] = run(problem, cfg);
        summaries[i] = summarize(factor_grid[i], logs[i]);
      } catch (const Error& e) {
        summaries[i].factor = factor_grid[i];
        summaries[i].final_subopt = std::numeric_limits<double>::quiet_NaN();
        summaries[i].error = e.what();
      }
    }
  };

  const unsigned pool = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(m)));
  if (pool == 1) {
    worker();
  } else {
    std::vector<std::thread> workers;
    for (unsigned t = 0; t < pool; ++t) workers.emplace_back(worker);
    for (auto& t : workers) t.join();
  }

  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < m; ++i) {
    const double v = summaries[i].final_subopt;
    if (!std::isfinite(v)) continue;
    if (!best) {
      best = i;
      continue;
    }
    const double bv = summaries[*best].final_subopt;
    if (v < bv || (v == bv && factor_grid[i] < factor_grid[*best])) best = i;
  }
  if (!best) {
    throw DivergenceError("tune: every factor diverged for " +
                              std::string(to_string(base_cfg.method)) + "/" +
                              std::string(to_string(base_cfg.compressor.kind)) + "/" +
                              std::string(to_string(base_cfg.schedule.kind)),
                          -1);
  }
  TuneResult result;
  result.best_factor = factor_grid[*best];
  result.final_subopt = summaries[*best].final_subopt;
  result.per_factor = std::move(summaries);
  result.best_log = std::move(logs[*best]);
  return result;
}

RunConfig make_run_config(const Problem& problem, const MethodConfig& method, double budget,
                          std::uint64_t seed, long max_rounds, long log_every) {
  RunConfig cfg;
  cfg.method = method.method;
  const std::size_t k = problem.d() / problem.n();
  cfg.compressor = CompressorSpec{method.compressor, std::max<std::size_t>(1, k), problem.d(),
                                  problem.n()};
  cfg.schedule.kind = method.schedule;
  if (method.method == Method::MarinaP) {
    cfg.p_full = static_cast<double>(cfg.compressor.k) / static_cast<double>(problem.d());
  }
  cfg.bit_budget_per_worker = budget;
  cfg.seed = seed;
  cfg.max_rounds = max_rounds;
  cfg.log_every = log_every;
  return cfg;
}

std::uint64_t cell_problem_seed(std::uint64_t seed, std::size_t d, std::size_t n, double s) {
  std::uint64_t h = mix_seed(seed, d);
  h = mix_seed(h, n);
  return mix_seed(h, std::bit_cast<std::uint64_t>(s));
}

std::uint64_t cell_run_seed(std::uint64_t problem_seed, const MethodConfig& method) {
  return mix_seed(problem_seed, hash_label(method.label()));
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out << contents;
    out.flush();
    if (!out) throw IoError("failed writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

nlohmann::json run_matrix(const ExperimentMatrix& matrix, const std::filesystem::path& out_dir,
                          unsigned threads) {
  matrix.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir / "cells", ec);
  if (ec) throw IoError("cannot create " + (out_dir / "cells").string() + ": " + ec.message());

  nlohmann::json manifest;
  manifest["matrix_config"] = matrix_to_json(matrix);
  auto cells = nlohmann::json::array();

  for (std::size_t d : matrix.dims) {
    for (std::size_t n : matrix.node_counts) {
      const double budget = matrix.budgets.at(n);
      for (double s : matrix.noise_scales) {
        for (std::uint64_t seed : matrix.seeds) {
          const std::uint64_t pseed = cell_problem_seed(seed, d, n, s);
          const Problem problem = generate(GenConfig{n, d, matrix.mu, s, pseed});
          for (const auto& mc : matrix.methods) {
            nlohmann::json cell = {{"d", d},
                                   {"n", n},
                                   {"s", s},
                                   {"seed", seed},
                                   {"problem_seed", pseed},
                                   {"method", std::string(to_string(mc.method))},
                                   {"compressor", std::string(to_string(mc.compressor))},
                                   {"schedule", std::string(to_string(mc.schedule))},
                                   {"label", mc.label()},
                                   {"budget", budget}};
            const std::string stem = "d" + std::to_string(d) + "_n" + std::to_string(n) + "_s" +
                                     format_short(s) + "_seed" + std::to_string(seed) + "_" +
                                     mc.label();
            try {
              const RunConfig cfg = make_run_config(problem, mc, budget, cell_run_seed(pseed, mc),
                                                    matrix.max_rounds, matrix.log_every);
              TuneResult tr = tune(problem, cfg, matrix.factor_grid, threads);
              std::ostringstream csv;
              write_metrics_csv(tr.best_log, csv);
              const std::string rel = "cells/" + stem + ".csv";
              write_file_atomic(out_dir / rel, csv.str());
              cell["best_factor"] = tr.best_factor;
              cell["final_subopt"] = finite_or_null(tr.final_subopt);
              cell["final_bits"] = tr.best_log.final_row().bits_per_worker;
              cell["rounds"] = tr.best_log.rounds;
              auto grid = nlohmann::json::array();
              for (const auto& f : tr.per_factor) {
                grid.push_back({{"factor", f.factor}, {"final_subopt", finite_or_null(f.final_subopt)}});
              }
              cell["tuning"] = grid;
              cell["csv_path"] = rel;
            } catch (const IoError&) {
              throw;
            } catch (const Error& e) {
              cell["error"] = e.what();
            }
            cells.push_back(std::move(cell));
          }
        }
      }
    }
  }
  manifest["cells"] = std::move(cells);
  write_file_atomic(out_dir / "manifest.json", manifest.dump(2) + "\n");
  return manifest;
}

}  // namespace subgradfed
