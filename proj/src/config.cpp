#include "subgradfed/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <stdexcept>

#include "subgradfed/error.hpp"

namespace subgradfed {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::string& where,
                    const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& item : obj.items()) {
    if (!allowed.count(item.key())) {
      throw ConfigError("unknown key '" + where + "." + item.key() + "'");
    }
  }
}

double get_number(const json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path + " must be a number");
  return v.get<double>();
}

double get_positive(const json& v, const std::string& path) {
  const double x = get_number(v, path);
  if (!(x > 0.0) || !std::isfinite(x)) throw ConfigError(path + " must be positive");
  return x;
}

std::uint64_t get_uint(const json& v, const std::string& path) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
    return static_cast<std::uint64_t>(v.get<std::int64_t>());
  }
  throw ConfigError(path + " must be a non-negative integer");
}

long get_long(const json& v, const std::string& path) {
  const std::uint64_t x = get_uint(v, path);
  if (x > static_cast<std::uint64_t>(std::numeric_limits<long>::max())) {
    throw ConfigError(path + " is too large");
  }
  return static_cast<long>(x);
}

bool get_bool(const json& v, const std::string& path) {
  if (!v.is_boolean()) throw ConfigError(path + " must be true or false");
  return v.get<bool>();
}

std::string get_string(const json& v, const std::string& path) {
  if (!v.is_string()) throw ConfigError(path + " must be a string");
  return v.get<std::string>();
}

std::vector<double> get_grid(const json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) throw ConfigError(path + " must be a nonempty array");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.push_back(get_positive(v[i], path + "[" + std::to_string(i) + "]"));
  }
  return out;
}

GenConfig parse_problem(const json& j) {
  reject_unknown(j, "problem", {"n", "d", "mu", "noise_scale", "seed"});
  GenConfig g;
  if (j.contains("n")) g.n = get_uint(j["n"], "problem.n");
  if (j.contains("d")) g.d = get_uint(j["d"], "problem.d");
  if (j.contains("mu")) g.mu = get_number(j["mu"], "problem.mu");
  if (j.contains("noise_scale")) g.noise_scale = get_number(j["noise_scale"], "problem.noise_scale");
  if (j.contains("seed")) g.seed = get_uint(j["seed"], "problem.seed");
  g.validate();
  return g;
}

RunConfig parse_run(const json& j) {
  reject_unknown(j, "run",
                 {"method", "compressor", "k", "schedule", "factor", "horizon_T", "f_star", "gamma0",
                  "p_full", "max_rounds", "bit_budget_per_worker", "seed", "log_lyapunov",
                  "log_every", "track_average"});
  RunConfig cfg;
  if (j.contains("method")) cfg.method = method_from_string(get_string(j["method"], "run.method"));
  if (j.contains("compressor")) {
    cfg.compressor.kind = compressor_kind_from_string(get_string(j["compressor"], "run.compressor"));
  }
  if (j.contains("k")) cfg.compressor.k = get_uint(j["k"], "run.k");
  if (j.contains("schedule")) {
    cfg.schedule.kind = resolve_schedule(get_string(j["schedule"], "run.schedule"), cfg.method);
  }
  if (j.contains("factor")) cfg.schedule.factor = get_positive(j["factor"], "run.factor");
  if (j.contains("horizon_T")) {
    const long T = get_long(j["horizon_T"], "run.horizon_T");
    if (T < 1) throw ConfigError("run.horizon_T must be >= 1");
    cfg.schedule.horizon_T = T;
  }
  if (j.contains("f_star")) cfg.schedule.f_star = get_number(j["f_star"], "run.f_star");
  if (j.contains("gamma0")) {
    const double g0 = get_number(j["gamma0"], "run.gamma0");
    if (!(g0 >= 0.0)) throw ConfigError("run.gamma0 must be >= 0");
    cfg.schedule.gamma0 = g0;
  }
  if (j.contains("p_full")) {
    const double p = get_number(j["p_full"], "run.p_full");
    if (!(p > 0.0 && p <= 1.0)) throw ConfigError("run.p_full must lie in (0, 1]");
    cfg.p_full = p;
  }
  if (j.contains("max_rounds")) cfg.max_rounds = get_long(j["max_rounds"], "run.max_rounds");
  if (j.contains("bit_budget_per_worker") && !j["bit_budget_per_worker"].is_null()) {
    cfg.bit_budget_per_worker = get_positive(j["bit_budget_per_worker"], "run.bit_budget_per_worker");
  }
  if (j.contains("seed")) cfg.seed = get_uint(j["seed"], "run.seed");
  if (j.contains("log_lyapunov")) cfg.log_lyapunov = get_bool(j["log_lyapunov"], "run.log_lyapunov");
  if (j.contains("log_every")) {
    cfg.log_every = get_long(j["log_every"], "run.log_every");
    if (cfg.log_every < 1) throw ConfigError("run.log_every must be >= 1");
  }
  if (j.contains("track_average")) {
    cfg.track_average = get_bool(j["track_average"], "run.track_average");
  }
  if (cfg.method == Method::SM && j.contains("compressor") &&
      cfg.compressor.kind != CompressorKind::Identity) {
    throw ConfigError("run.compressor: sm only supports identity");
  }
  return cfg;
}

ExperimentMatrix parse_matrix(const json& j) {
  reject_unknown(j, "matrix",
                 {"preset", "dims", "node_counts", "noise_scales", "methods", "factor_grid",
                  "budgets", "seeds", "mu", "max_rounds", "log_every"});
  ExperimentMatrix m = ExperimentMatrix::desk();
  if (j.contains("preset")) {
    const std::string preset = get_string(j["preset"], "matrix.preset");
    if (preset == "desk") {
      m = ExperimentMatrix::desk();
    } else if (preset == "full") {
      m = ExperimentMatrix::full();
    } else {
      throw ConfigError("matrix.preset must be 'desk' or 'full'");
    }
  }
  auto uint_list = [](const json& v, const std::string& path) {
    if (!v.is_array() || v.empty()) throw ConfigError(path + " must be a nonempty array");
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      out.push_back(get_uint(v[i], path + "[" + std::to_string(i) + "]"));
    }
    return out;
  };
  if (j.contains("dims")) m.dims = uint_list(j["dims"], "matrix.dims");
  if (j.contains("node_counts")) m.node_counts = uint_list(j["node_counts"], "matrix.node_counts");
  if (j.contains("noise_scales")) {
    const auto& v = j["noise_scales"];
    if (!v.is_array() || v.empty()) throw ConfigError("matrix.noise_scales must be a nonempty array");
    m.noise_scales.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
      m.noise_scales.push_back(get_number(v[i], "matrix.noise_scales[" + std::to_string(i) + "]"));
    }
  }
  if (j.contains("methods")) {
    const auto& v = j["methods"];
    if (!v.is_array() || v.empty()) throw ConfigError("matrix.methods must be a nonempty array");
    m.methods.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
      const std::string where = "matrix.methods[" + std::to_string(i) + "]";
      reject_unknown(v[i], where, {"method", "compressor", "schedule"});
      if (!v[i].contains("method") || !v[i].contains("compressor") || !v[i].contains("schedule")) {
        throw ConfigError(where + " needs method, compressor and schedule");
      }
      MethodConfig mc;
      mc.method = method_from_string(get_string(v[i]["method"], where + ".method"));
      mc.compressor =
          compressor_kind_from_string(get_string(v[i]["compressor"], where + ".compressor"));
      mc.schedule = resolve_schedule(get_string(v[i]["schedule"], where + ".schedule"), mc.method);
      m.methods.push_back(mc);
    }
  }
  if (j.contains("factor_grid")) m.factor_grid = get_grid(j["factor_grid"], "matrix.factor_grid");
  if (j.contains("budgets")) {
    const auto& v = j["budgets"];
    if (!v.is_object() || v.empty()) throw ConfigError("matrix.budgets must be a nonempty object");
    m.budgets.clear();
    for (const auto& item : v.items()) {
      std::size_t n = 0;
      try {
        std::size_t used = 0;
        n = std::stoul(item.key(), &used);
        if (used != item.key().size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw ConfigError("matrix.budgets keys must be node counts, got '" + item.key() + "'");
      }
      m.budgets[n] = get_positive(item.value(), "matrix.budgets." + item.key());
    }
  }
  if (j.contains("seeds")) {
    const auto& v = j["seeds"];
    if (!v.is_array() || v.empty()) throw ConfigError("matrix.seeds must be a nonempty array");
    m.seeds.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
      m.seeds.push_back(get_uint(v[i], "matrix.seeds[" + std::to_string(i) + "]"));
    }
  }
  if (j.contains("mu")) m.mu = get_positive(j["mu"], "matrix.mu");
  if (j.contains("max_rounds")) m.max_rounds = get_long(j["max_rounds"], "matrix.max_rounds");
  if (j.contains("log_every")) m.log_every = get_long(j["log_every"], "matrix.log_every");
  m.validate();
  return m;
}

}  // namespace

ScheduleKind resolve_schedule(const std::string& name, Method method) {
  if (name == "polyak") {
    return method == Method::MarinaP ? ScheduleKind::PolyakMarinaP : ScheduleKind::PolyakEF21P;
  }
  return schedule_kind_from_string(name);
}

CliConfig parse_cli_config(const nlohmann::json& doc) {
  reject_unknown(doc, "config", {"problem", "run", "tune", "matrix"});
  CliConfig cfg;
  if (doc.contains("problem")) cfg.problem = parse_problem(doc["problem"]);
  if (doc.contains("run")) cfg.run = parse_run(doc["run"]);
  if (doc.contains("tune")) {
    reject_unknown(doc["tune"], "tune", {"factor_grid"});
    if (doc["tune"].contains("factor_grid")) {
      cfg.factor_grid = get_grid(doc["tune"]["factor_grid"], "tune.factor_grid");
    }
  }
  if (doc.contains("matrix")) cfg.matrix = parse_matrix(doc["matrix"]);
  return cfg;
}

CliConfig load_cli_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_cli_config(doc);
}

std::string config_reference() {
  return R"(Config file (JSON, every section optional, unknown keys rejected):
  problem.n                    workers                          default 1
  problem.d                    dimension                        default 1
  problem.mu                   smallest eigenvalue of mean A    default 1e-6
  problem.noise_scale          s in nu_i = 1 + s xi_i           default 0
  problem.seed                 generator seed                   default 0
  run.method                   sm | ef21p | marinap             default sm
  run.compressor               topk | scaled_randk | same_randk | ind_randk | permk | identity
                                                                default identity
  run.k                        kept coordinates, 0 = ceil(d/n)  default 0
  run.schedule                 constant_optimal | decreasing | polyak | polyak_ef21p |
                               polyak_marinap | sm_baseline | fixed_constant
                                                                default constant_optimal
  run.factor                   multiplier on the stepsize       default 1
  run.horizon_T                horizon of the constant rules    default budget/bits-per-round, else max_rounds
  run.f_star                   optimal value for Polyak         default 0 (exact for generated problems)
  run.gamma0                   fixed/decreasing base stepsize   default theory value
  run.p_full                   MARINA-P full-sync probability   default k/d
  run.max_rounds               round cap                        default 1000
  run.bit_budget_per_worker    stop once reached                default none
  run.seed                     run seed                         default 0
  run.log_lyapunov             add the lyapunov column          default false
  run.log_every                row stride                       default 1
  run.track_average            add f_subopt_avg                 default false
  tune.factor_grid             factors tried by tune            default 2^-9 ... 2^7
  matrix.preset                desk | full                      default desk
  matrix.dims                  list of d                        desk [200]
  matrix.node_counts           list of n                        desk [10]
  matrix.noise_scales          list of s                        desk [0.1, 1]
  matrix.methods               [{method, compressor, schedule}] desk: ef21p topk, marinap
                               same_randk / ind_randk / permk, each constant_optimal and polyak
  matrix.factor_grid           factors tried per cell           default 2^-9 ... 2^7
  matrix.budgets               {"n": bits per worker}           desk {"10": 1e7}
  matrix.seeds                 list of seeds                    default [1]
  matrix.mu                    generator mu                     default 1e-6
  matrix.max_rounds            round cap per run                default 100000000
  matrix.log_every             row stride                       desk 1, full 10
)";
}

}  // namespace subgradfed
