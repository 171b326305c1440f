#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "subgradfed/compressors.hpp"
#include "subgradfed/optimizers.hpp"
#include "subgradfed/problem.hpp"
#include "subgradfed/schedules.hpp"

namespace subgradfed {

struct MethodConfig {
  Method method = Method::SM;
  CompressorKind compressor = CompressorKind::Identity;
  ScheduleKind schedule = ScheduleKind::ConstantOptimal;

  /// e.g. "marinap_permk_polyak_marinap"; also the file stem inside a cell.
  std::string label() const;
};

struct ExperimentMatrix {
  std::vector<std::size_t> dims;
  std::vector<std::size_t> node_counts;
  std::vector<double> noise_scales;
  std::vector<MethodConfig> methods;
  std::vector<double> factor_grid = default_factor_grid();
  std::map<std::size_t, double> budgets;  // n -> bits per worker
  std::vector<std::uint64_t> seeds{1};
  double mu = 1e-6;
  long max_rounds = 100'000'000;  // safety cap; budgets end the runs
  long log_every = 1;

  /// Throws ConfigError (empty axes, d % n != 0, missing budget, ...).
  void validate() const;

  /// d=200, n=10, s in {0.1, 1}, 10^7 bits, 4 method-configs x 2 schedules.
  static ExperimentMatrix desk();
  /// d=1000, n in {10, 100}, s in {0.1, 1, 10}, 3.5e8 / 3.5e7 bits.
  static ExperimentMatrix full();
  /// EF21-P TopK plus MARINA-P SameRandK / IndRandK / PermK, each with the
  /// constant-optimal and the method's Polyak schedule.
  static std::vector<MethodConfig> default_methods();
};

nlohmann::json matrix_to_json(const ExperimentMatrix& m);

struct FactorSummary {
  double factor = 0.0;
  double final_subopt = 0.0;  // NaN when the run diverged or failed
  long rounds = 0;
  double final_bits = 0.0;
  bool diverged = false;
  std::string error;
};

struct TuneResult {
  double best_factor = 0.0;
  double final_subopt = 0.0;
  std::vector<FactorSummary> per_factor;  // grid order
  MetricsLog best_log;
};

/// Runs base_cfg once per factor (up to `threads` at a time) and keeps the
/// factor with the smallest final f_subopt_w; ties go to the smaller factor.
/// Throws DivergenceError when no factor finishes with a finite value.
TuneResult tune(const Problem& problem, const RunConfig& base_cfg,
                const std::vector<double>& factor_grid, unsigned threads = 1);

/// Benchmark protocol: k = d / n, p = k / d, per-worker budget.
RunConfig make_run_config(const Problem& problem, const MethodConfig& method, double budget,
                          std::uint64_t seed, long max_rounds, long log_every);

/// Seeds of one cell; adding cells or methods never changes existing ones.
std::uint64_t cell_problem_seed(std::uint64_t seed, std::size_t d, std::size_t n, double s);
std::uint64_t cell_run_seed(std::uint64_t problem_seed, const MethodConfig& method);

/// Runs every cell, writes one CSV per cell and `manifest.json` into
/// out_dir, and returns the manifest. Failed cells carry an "error" field.
nlohmann::json run_matrix(const ExperimentMatrix& matrix, const std::filesystem::path& out_dir,
                          unsigned threads = 1);

/// Writes through a temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace subgradfed
