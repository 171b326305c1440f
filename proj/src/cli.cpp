#include "subgradfed/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "subgradfed/config.hpp"
#include "subgradfed/error.hpp"
#include "subgradfed/harness.hpp"
#include "subgradfed/optimizers.hpp"
#include "subgradfed/problem.hpp"
#include "subgradfed/report.hpp"

namespace subgradfed {

namespace {

namespace fs = std::filesystem;

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
  std::string problem;
  std::string csv;
  std::string summary;
  std::string column = "f_subopt_w";
  std::vector<std::string> inputs;
};

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string g6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

Problem problem_for(const Options& opt, const CliConfig& cfg) {
  if (!opt.problem.empty()) return load_problem(opt.problem);
  if (!cfg.problem) throw ConfigError("no problem: pass --problem or add a 'problem' section");
  return generate(*cfg.problem);
}

RunConfig run_config_for(const Options& opt, const CliConfig& cfg, const Problem& problem) {
  if (!cfg.run) throw ConfigError("config has no 'run' section");
  RunConfig run = *cfg.run;
  if (opt.seed) run.seed = *opt.seed;
  normalize_run_config(problem, run);
  return run;
}

void print_constants(const Problem& p, std::ostream& out) {
  const auto& c = p.constants();
  out << "n        " << p.n() << '\n'
      << "d        " << p.d() << '\n'
      << "s        " << g6(p.config().noise_scale) << '\n'
      << "mu       " << g6(p.config().mu) << '\n'
      << "sigma_A  " << g6(c.sigma_A) << '\n'
      << "L0       " << g6(c.L0) << '\n'
      << "L_bar    " << g6(c.L_bar) << '\n'
      << "L_tilde  " << g6(c.L_tilde) << '\n'
      << "R0^2     " << g6(c.R0_sq) << '\n';
}

int cmd_generate(const Options& opt, std::ostream& out) {
  const CliConfig cfg = load_cli_config(opt.config);
  if (!cfg.problem) throw ConfigError("config has no 'problem' section");
  GenConfig gen = *cfg.problem;
  if (opt.seed) gen.seed = *opt.seed;
  const Problem p = generate(gen);
  save_problem(p, opt.out);
  print_constants(p, out);
  return kExitOk;
}

int cmd_run(const Options& opt, std::ostream& out, std::ostream& err) {
  const CliConfig cfg = load_cli_config(opt.config);
  const Problem problem = problem_for(opt, cfg);
  const RunConfig run_cfg = run_config_for(opt, cfg, problem);
  const MetricsLog log = run(problem, run_cfg);
  std::ostringstream csv;
  write_metrics_csv(log, csv);
  write_file_atomic(opt.out, csv.str());
  if (log.diverged) {
    err << "diverged: non-finite suboptimality at round " << log.diverged_round << '\n';
    return kExitDivergence;
  }
  const auto& last = log.final_row();
  out << "rounds " << log.rounds << "  bits/worker " << g6(last.bits_per_worker)
      << "  f_subopt_w " << g6(last.f_subopt_w) << "  f_subopt_x " << g6(last.f_subopt_x)
      << "  best " << g6(last.best_f_subopt_w) << '\n';
  return kExitOk;
}

int cmd_tune(const Options& opt, std::ostream& out) {
  const CliConfig cfg = load_cli_config(opt.config);
  const Problem problem = problem_for(opt, cfg);
  const RunConfig run_cfg = run_config_for(opt, cfg, problem);
  const TuneResult tr = tune(problem, run_cfg, cfg.factor_grid, opt.threads);

  nlohmann::json j;
  j["method"] = std::string(to_string(run_cfg.method));
  j["compressor"] = std::string(to_string(run_cfg.compressor.kind));
  j["schedule"] = std::string(to_string(run_cfg.schedule.kind));
  j["best_factor"] = tr.best_factor;
  j["final_subopt"] = tr.final_subopt;
  auto grid = nlohmann::json::array();
  for (const auto& f : tr.per_factor) {
    nlohmann::json row = {{"factor", f.factor}, {"rounds", f.rounds}, {"diverged", f.diverged}};
    row["final_subopt"] = std::isfinite(f.final_subopt) ? nlohmann::json(f.final_subopt) : nlohmann::json();
    if (!f.error.empty()) row["error"] = f.error;
    grid.push_back(std::move(row));
    out << "factor " << g6(f.factor) << "  final " << g6(f.final_subopt) << '\n';
  }
  j["tuning"] = grid;
  write_file_atomic(opt.out, j.dump(2) + "\n");
  if (!opt.csv.empty()) {
    std::ostringstream csv;
    write_metrics_csv(tr.best_log, csv);
    write_file_atomic(opt.csv, csv.str());
  }
  out << "best factor " << g6(tr.best_factor) << "  final " << g17(tr.final_subopt) << '\n';
  return kExitOk;
}

int cmd_matrix(const Options& opt, std::ostream& out) {
  ExperimentMatrix matrix = ExperimentMatrix::desk();
  if (!opt.config.empty()) {
    const CliConfig cfg = load_cli_config(opt.config);
    if (cfg.matrix) matrix = *cfg.matrix;
  }
  if (opt.seed) matrix.seeds = {*opt.seed};
  matrix.validate();
  const auto manifest = run_matrix(matrix, opt.out, opt.threads);
  std::size_t failed = 0;
  for (const auto& cell : manifest["cells"]) {
    if (cell.contains("error")) {
      ++failed;
      out << "cell " << cell["label"].get<std::string>() << " failed: "
          << cell["error"].get<std::string>() << '\n';
    }
  }
  out << manifest["cells"].size() << " cells, " << failed << " failed; manifest "
      << (fs::path(opt.out) / "manifest.json").string() << '\n';
  return kExitOk;
}

int cmd_report(const Options& opt, std::ostream& out) {
  if (opt.inputs.empty()) throw ConfigError("report needs at least one CSV or manifest");
  std::vector<fs::path> inputs(opt.inputs.begin(), opt.inputs.end());
  const auto curves = load_curves(inputs, opt.column);
  if (curves.empty()) throw ConfigError("report inputs contain no curves");
  write_file_atomic(opt.out, render_svg(curves));
  fs::path summary = opt.summary.empty() ? fs::path(opt.out).replace_extension(".json")
                                         : fs::path(opt.summary);
  write_file_atomic(summary, report_summary(curves).dump(2) + "\n");
  for (const auto& c : curves) {
    out << c.label << "  final " << g6(c.final_value) << "  dropped " << c.dropped << '\n';
  }
  return kExitOk;
}

int exit_code_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::Config:
    case ErrorKind::Dimension:
    case ErrorKind::DegenerateOracle:
      return kExitConfig;
    case ErrorKind::Io:
      return kExitIo;
    case ErrorKind::Divergence:
      return kExitDivergence;
  }
  return kExitConfig;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Compressed subgradient methods with server-to-worker compression", "subgradfed"};
  app.require_subcommand(1);
  app.footer(config_reference());
  Options opt;

  auto add_seed = [&](CLI::App* sub) {
    sub->add_option_function<std::uint64_t>(
        "--seed", [&](const std::uint64_t& s) { opt.seed = s; }, "Override the seed in the config");
  };

  auto* gen = app.add_subcommand("generate", "Generate a synthetic problem and print its constants");
  gen->add_option("--config", opt.config, "Config file (uses the problem section)")->required();
  gen->add_option("--out", opt.out, "Problem JSON to write")->required();
  add_seed(gen);

  auto* run_cmd = app.add_subcommand("run", "Run one method and write its metrics CSV");
  run_cmd->add_option("--config", opt.config, "Config file (run section, problem section if no --problem)")
      ->required();
  run_cmd->add_option("--problem", opt.problem, "Problem JSON from 'generate'");
  run_cmd->add_option("--out", opt.out, "Metrics CSV to write")->required();
  add_seed(run_cmd);

  auto* tune_cmd = app.add_subcommand("tune", "Grid-search the stepsize factor");
  tune_cmd->add_option("--config", opt.config, "Config file (run and tune sections)")->required();
  tune_cmd->add_option("--problem", opt.problem, "Problem JSON from 'generate'");
  tune_cmd->add_option("--out", opt.out, "Tuning summary JSON to write")->required();
  tune_cmd->add_option("--csv", opt.csv, "Also write the winning run's CSV here");
  tune_cmd->add_option("--threads", opt.threads, "Parallel runs")->check(CLI::PositiveNumber);
  add_seed(tune_cmd);

  auto* matrix_cmd = app.add_subcommand("matrix", "Tune and run every cell of an experiment matrix");
  matrix_cmd->add_option("--config", opt.config, "Config file (matrix section; desk preset if absent)");
  matrix_cmd->add_option("--out", opt.out, "Output directory")->required();
  matrix_cmd->add_option("--threads", opt.threads, "Parallel runs per cell")->check(CLI::PositiveNumber);
  add_seed(matrix_cmd);

  auto* report_cmd = app.add_subcommand("report", "Plot CSVs or a manifest to SVG");
  report_cmd->add_option("inputs", opt.inputs, "CSV files or manifest.json");
  report_cmd->add_option("--out", opt.out, "SVG to write")->required();
  report_cmd->add_option("--summary", opt.summary, "Summary JSON (default: SVG path with .json)");
  report_cmd->add_option("--column", opt.column, "Suboptimality column to plot")
      ->capture_default_str();

  for (auto* sub : {gen, run_cmd, tune_cmd, matrix_cmd, report_cmd}) sub->footer(config_reference());

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitConfig;
  }

  try {
    if (gen->parsed()) return cmd_generate(opt, out);
    if (run_cmd->parsed()) return cmd_run(opt, out, err);
    if (tune_cmd->parsed()) return cmd_tune(opt, out);
    if (matrix_cmd->parsed()) return cmd_matrix(opt, out);
    if (report_cmd->parsed()) return cmd_report(opt, out);
  } catch (const DivergenceError& e) {
    err << "error: " << e.what();
    if (e.round() >= 0) err << " (round " << e.round() << ")";
    err << '\n';
    return kExitDivergence;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitConfig;
}

}  // namespace subgradfed
