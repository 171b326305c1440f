#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "subgradfed/error.hpp"
#include "subgradfed/harness.hpp"
#include "subgradfed/rng.hpp"

using namespace subgradfed;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("subgradfed_harness_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

RunConfig polyak_sm(long rounds) {
  RunConfig cfg;
  cfg.method = Method::SM;
  cfg.compressor.kind = CompressorKind::Identity;
  cfg.schedule.kind = ScheduleKind::PolyakEF21P;
  cfg.max_rounds = rounds;
  cfg.seed = 3;
  return cfg;
}

ExperimentMatrix tiny_matrix() {
  ExperimentMatrix m;
  m.dims = {20};
  m.node_counts = {4};
  m.noise_scales = {1.0};
  m.methods = {{Method::MarinaP, CompressorKind::PermK, ScheduleKind::PolyakMarinaP}};
  m.factor_grid = {0.5, 1.0};
  m.budgets = {{4, 2e4}};
  return m;
}

}  // namespace

TEST_CASE("method labels") {
  CHECK(MethodConfig{Method::EF21P, CompressorKind::TopK, ScheduleKind::ConstantOptimal}.label() ==
        "ef21p_topk_constant_optimal");
  CHECK(MethodConfig{Method::MarinaP, CompressorKind::PermK, ScheduleKind::PolyakMarinaP}.label() ==
        "marinap_permk_polyak_marinap");
}

TEST_CASE("presets") {
  const auto desk = ExperimentMatrix::desk();
  CHECK(desk.dims == std::vector<std::size_t>{200});
  CHECK(desk.node_counts == std::vector<std::size_t>{10});
  CHECK(desk.noise_scales == std::vector<double>{0.1, 1.0});
  CHECK(desk.budgets.at(10) == 1e7);
  CHECK(desk.methods.size() == 8);
  desk.validate();

  const auto full = ExperimentMatrix::full();
  CHECK(full.dims == std::vector<std::size_t>{1000});
  CHECK(full.node_counts == std::vector<std::size_t>{10, 100});
  CHECK(full.noise_scales == std::vector<double>{0.1, 1.0, 10.0});
  CHECK(full.budgets.at(10) == 3.5e8);
  CHECK(full.budgets.at(100) == 3.5e7);
  full.validate();
}

TEST_CASE("matrix validation") {
  auto m = tiny_matrix();
  m.dims = {21};
  CHECK_THROWS_AS(m.validate(), ConfigError);
  m = tiny_matrix();
  m.budgets.clear();
  CHECK_THROWS_AS(m.validate(), ConfigError);
  m = tiny_matrix();
  m.methods.clear();
  CHECK_THROWS_AS(m.validate(), ConfigError);
  m = tiny_matrix();
  m.factor_grid = {1.0, -1.0};
  CHECK_THROWS_AS(m.validate(), ConfigError);
  m = tiny_matrix();
  m.noise_scales = {-0.5};
  CHECK_THROWS_AS(m.validate(), ConfigError);
}

TEST_CASE("run config follows k = d/n and p = k/d") {
  const auto p = generate({4, 20, 1e-6, 1.0, 5});
  const auto cfg = make_run_config(
      p, {Method::MarinaP, CompressorKind::IndRandK, ScheduleKind::ConstantOptimal}, 1e5, 9, 100, 1);
  CHECK(cfg.compressor.k == 5);
  CHECK(*cfg.p_full == doctest::Approx(0.25));
  CHECK(cfg.bit_budget_per_worker == 1e5);
  CHECK(cfg.seed == 9);
}

TEST_CASE("tune with a single factor equals a plain run") {
  const auto p = generate({3, 12, 1e-6, 1.0, 4});
  auto cfg = polyak_sm(50);
  cfg.schedule.factor = 0.7;
  const auto direct = run(p, cfg);
  const auto tr = tune(p, polyak_sm(50), {0.7});
  CHECK(tr.best_factor == 0.7);
  CHECK(tr.final_subopt == direct.final_row().f_subopt_w);
  REQUIRE(tr.per_factor.size() == 1);
  REQUIRE(tr.best_log.rows.size() == direct.rows.size());
  for (std::size_t i = 0; i < direct.rows.size(); ++i) {
    CHECK(tr.best_log.rows[i].f_subopt_w == direct.rows[i].f_subopt_w);
  }
}

TEST_CASE("tune picks the smallest final value and skips divergent factors") {
  const auto p = generate({3, 12, 1e-6, 1.0, 4});
  const std::vector<double> grid = {1e6, 0.25, 0.5, 1.0};
  const auto tr = tune(p, polyak_sm(60), grid, 3);
  REQUIRE(tr.per_factor.size() == 4);
  CHECK(tr.per_factor[0].diverged);
  CHECK(std::isnan(tr.per_factor[0].final_subopt));
  double best = INFINITY;
  double arg = 0;
  for (double f : {0.25, 0.5, 1.0}) {
    auto cfg = polyak_sm(60);
    cfg.schedule.factor = f;
    const double v = run(p, cfg).final_row().f_subopt_w;
    if (v < best) {
      best = v;
      arg = f;
    }
  }
  CHECK(tr.best_factor == arg);
  CHECK(tr.final_subopt == best);

  // Thread count does not change the answer.
  const auto serial = tune(p, polyak_sm(60), grid, 1);
  CHECK(serial.best_factor == tr.best_factor);
  CHECK(serial.final_subopt == tr.final_subopt);
}

TEST_CASE("ties go to the smaller factor") {
  // Identity problem with x0 = 0: every factor stays at the optimum.
  const auto g = generate({2, 4, 1e-6, 0.0, 1});
  const auto p = Problem::from_parts(g.config(), g.scales(), g.shift(), Vector(4, 0.0));
  const auto tr = tune(p, polyak_sm(5), {2.0, 1.0, 3.0});
  CHECK(tr.final_subopt == 0.0);
  CHECK(tr.best_factor == 1.0);
}

TEST_CASE("tune fails when every factor diverges") {
  const auto p = generate({3, 12, 1e-6, 1.0, 4});
  CHECK_THROWS_AS(tune(p, polyak_sm(1000), {1e6, 1e7}), DivergenceError);
  CHECK_THROWS_AS(tune(p, polyak_sm(10), {}), ConfigError);
}

TEST_CASE("cell seeds are derived from the cell coordinates") {
  const std::uint64_t ps = cell_problem_seed(1, 200, 10, 0.1);
  CHECK(ps == mix_seed(mix_seed(mix_seed(1, 200), 10), std::bit_cast<std::uint64_t>(0.1)));
  const MethodConfig mc{Method::EF21P, CompressorKind::TopK, ScheduleKind::PolyakEF21P};
  CHECK(cell_run_seed(ps, mc) == mix_seed(ps, hash_label(mc.label())));
  CHECK(cell_problem_seed(1, 200, 10, 0.1) != cell_problem_seed(1, 200, 10, 1.0));
  CHECK(cell_problem_seed(1, 200, 10, 0.1) != cell_problem_seed(2, 200, 10, 0.1));
}

TEST_CASE("a one-cell matrix writes one CSV and a manifest") {
  const auto dir = scratch_dir("one");
  const auto m = tiny_matrix();
  const auto manifest = run_matrix(m, dir);
  REQUIRE(manifest["cells"].size() == 1);
  const auto& cell = manifest["cells"][0];
  CHECK(cell["label"] == "marinap_permk_polyak_marinap");
  CHECK(cell["d"] == 20);
  CHECK(cell["n"] == 4);
  CHECK(cell.contains("best_factor"));
  CHECK(cell["tuning"].size() == 2);
  CHECK_FALSE(cell.contains("error"));
  const fs::path csv = dir / cell["csv_path"].get<std::string>();
  CHECK(fs::exists(csv));
  CHECK(fs::exists(dir / "manifest.json"));
  CHECK(nlohmann::json::parse(slurp(dir / "manifest.json")) == manifest);
  // Budget: the run stops on the first state at or above 2e4 bits.
  const double bits = cell["final_bits"];
  CHECK(bits >= 2e4);
  // PermK with k = 5 of d = 20 costs 5 * (65 + log2 20) bits per round.
  CHECK(bits < 2e4 + 2 * 20 * 64);
  for (const auto& e : fs::directory_iterator(dir / "cells")) {
    CHECK(e.path().extension() == ".csv");
  }
}

TEST_CASE("matrix output is deterministic and stable under added cells") {
  const auto a = scratch_dir("a");
  const auto b = scratch_dir("b");
  auto m = tiny_matrix();
  const auto ma = run_matrix(m, a);
  auto m2 = m;
  m2.noise_scales = {0.1, 1.0};
  m2.methods.push_back({Method::EF21P, CompressorKind::TopK, ScheduleKind::PolyakEF21P});
  const auto mb = run_matrix(m2, b, 2);
  REQUIRE(mb["cells"].size() == 4);
  const auto rel = ma["cells"][0]["csv_path"].get<std::string>();
  CHECK(slurp(a / rel) == slurp(b / rel));

  const auto c = scratch_dir("c");
  run_matrix(m, c);
  CHECK(slurp(a / "manifest.json") == slurp(c / "manifest.json"));
  CHECK(slurp(a / rel) == slurp(c / rel));
}

TEST_CASE("failed cells are recorded, not fatal") {
  const auto dir = scratch_dir("fail");
  auto m = tiny_matrix();
  m.factor_grid = {1e6};
  m.methods = {{Method::SM, CompressorKind::Identity, ScheduleKind::PolyakEF21P}};
  m.budgets = {{4, 1e9}};
  m.max_rounds = 2000;
  const auto manifest = run_matrix(m, dir);
  REQUIRE(manifest["cells"].size() == 1);
  CHECK(manifest["cells"][0].contains("error"));
}

TEST_CASE("atomic writes leave no temporary file") {
  const auto dir = scratch_dir("atomic");
  write_file_atomic(dir / "x.txt", "hello");
  CHECK(slurp(dir / "x.txt") == "hello");
  CHECK_FALSE(fs::exists(dir / "x.txt.tmp"));
  CHECK_THROWS_AS(write_file_atomic(dir / "missing" / "x.txt", "a"), IoError);
}
