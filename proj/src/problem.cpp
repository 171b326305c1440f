#include "subgradfed/problem.hpp"

#include <cmath>
#include <fstream>
#include <string>

#include "subgradfed/error.hpp"
#include "subgradfed/rng.hpp"

namespace subgradfed {

namespace {

// Stream tag separating problem generation from run-time randomness.
constexpr std::uint64_t kGeneratorTag = 0x5052'4F42'4C45'4D00ULL;

void require_dim(const Problem& p, std::span<const double> x) {
  if (x.size() != p.d()) {
    throw DimensionError("expected a vector of length " + std::to_string(p.d()) + ", got " +
                         std::to_string(x.size()));
  }
}

void require_worker(const Problem& p, std::size_t i) {
  if (i >= p.n()) {
    throw DimensionError("worker index " + std::to_string(i) + " out of range [0, " +
                         std::to_string(p.n()) + ")");
  }
}

}  // namespace

void GenConfig::validate() const {
  if (n < 1) throw ConfigError("n must be >= 1");
  if (d < 1) throw ConfigError("d must be >= 1");
  if (!(mu > 0.0) || !std::isfinite(mu)) throw ConfigError("mu must be a positive finite number");
  if (!(noise_scale >= 0.0) || !std::isfinite(noise_scale)) {
    throw ConfigError("noise_scale must be a non-negative finite number");
  }
}

Problem Problem::from_parts(const GenConfig& config, std::vector<double> scales, double shift,
                            Vector x0) {
  config.validate();
  if (scales.size() != config.n) throw DimensionError("scales must have n entries");
  if (x0.size() != config.d) throw DimensionError("x0 must have d entries");

  Problem p;
  p.config_ = config;
  p.scales_ = std::move(scales);
  p.shift_ = shift;
  p.x0_ = std::move(x0);
  p.x_star_.assign(config.d, 0.0);
  p.matrices_.reserve(config.n);
  p.lipschitz_.reserve(config.n);
  double sum = 0.0;
  double sum_sq = 0.0;
  for (double scale : p.scales_) {
    SymTridiagMatrix m(config.d, scale, shift);
    const double norm = eig_extremes(m).spectral_norm;
    p.matrices_.push_back(m);
    p.lipschitz_.push_back(norm);
    sum += norm;
    sum_sq += norm * norm;
  }
  const auto n = static_cast<double>(config.n);
  p.constants_.L0 = sum / n;
  p.constants_.L_bar = p.constants_.L0;
  p.constants_.L_tilde = std::sqrt(sum_sq / n);
  p.constants_.sigma_A = sigma_A_from_norms(p.lipschitz_);
  p.constants_.R0_sq = dist_sq(p.x0_, p.x_star_);
  return p;
}

Problem generate(const GenConfig& config) {
  config.validate();
  Rng rng(mix_seed(config.seed, kGeneratorTag));
  std::vector<double> scales(config.n);
  for (auto& scale : scales) {
    const double nu = 1.0 + config.noise_scale * rng.normal();
    scale = nu / 4.0;
  }
  // The family is closed under averaging: mean A = (mean scale) P.
  double mean_scale = 0.0;
  for (double scale : scales) mean_scale += scale;
  mean_scale /= static_cast<double>(config.n);
  const double lambda_min = eig_extremes(SymTridiagMatrix(config.d, mean_scale, 0.0)).lambda_min;
  const double shift = config.mu - lambda_min;

  Vector x0(config.d);
  for (auto& v : x0) v = rng.normal();
  return Problem::from_parts(config, std::move(scales), shift, std::move(x0));
}

double f_i_value(const Problem& p, std::size_t i, std::span<const double> x) {
  require_worker(p, i);
  require_dim(p, x);
  const Vector y = matvec(p.matrices()[i], x);
  double acc = 0.0;
  for (double v : y) acc += std::abs(v);
  return acc;
}

double f_value(const Problem& p, std::span<const double> x) {
  double acc = 0.0;
  for (std::size_t i = 0; i < p.n(); ++i) acc += f_i_value(p, i, x);
  return acc / static_cast<double>(p.n());
}

double evaluate_worker(const Problem& p, std::size_t i, std::span<const double> x,
                       std::span<double> g, std::span<double> scratch) {
  require_worker(p, i);
  require_dim(p, x);
  const auto& m = p.matrices()[i];
  matvec_into(m, x, scratch);
  double f = 0.0;
  for (double& v : scratch) {
    f += std::abs(v);
    v = v >= 0.0 ? 1.0 : -1.0;
  }
  // A_i is symmetric, so A_i^T s = A_i s.
  matvec_into(m, scratch, g);
  return f;
}

Vector subgradient_i(const Problem& p, std::size_t i, std::span<const double> x) {
  Vector g(p.d());
  Vector scratch(p.d());
  evaluate_worker(p, i, x, g, scratch);
  return g;
}

double sigma_A_from_norms(std::span<const double> norms) {
  if (norms.empty()) return 0.0;
  // Shifted-data form of mean(L^2) - mean(L)^2; exact zero for equal norms.
  const double pivot = norms[0];
  double s1 = 0.0;
  double s2 = 0.0;
  for (double v : norms) {
    const double dv = v - pivot;
    s1 += dv;
    s2 += dv * dv;
  }
  const auto n = static_cast<double>(norms.size());
  double radicand = s2 / n - (s1 / n) * (s1 / n);
  if (radicand < 0.0 && radicand > -1e-12) radicand = 0.0;
  return std::sqrt(radicand);
}

double sigma_A(const Problem& p) { return sigma_A_from_norms(p.lipschitz()); }

nlohmann::json problem_to_json(const Problem& p) {
  const auto& c = p.config();
  return nlohmann::json{{"n", c.n},
                        {"d", c.d},
                        {"mu", c.mu},
                        {"noise_scale", c.noise_scale},
                        {"seed", c.seed},
                        {"scales", p.scales()},
                        {"shift", p.shift()},
                        {"x0", p.x0()}};
}

Problem problem_from_json(const nlohmann::json& j) {
  try {
    GenConfig c;
    c.n = j.at("n").get<std::size_t>();
    c.d = j.at("d").get<std::size_t>();
    c.mu = j.at("mu").get<double>();
    c.noise_scale = j.at("noise_scale").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return Problem::from_parts(c, j.at("scales").get<std::vector<double>>(),
                               j.at("shift").get<double>(), j.at("x0").get<Vector>());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed problem JSON: ") + e.what());
  } catch (const DimensionError& e) {
    throw ConfigError(std::string("inconsistent problem JSON: ") + e.what());
  }
}

void save_problem(const Problem& p, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << problem_to_json(p).dump(1) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

Problem load_problem(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("cannot parse " + path.string() + ": " + e.what());
  }
  return problem_from_json(j);
}

}  // namespace subgradfed
