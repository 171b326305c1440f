#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cmath>
#include <string>

#include "subgradfed/compressors.hpp"
#include "subgradfed/config.hpp"
#include "subgradfed/error.hpp"
#include "subgradfed/harness.hpp"
#include "subgradfed/optimizers.hpp"
#include "subgradfed/problem.hpp"
#include "subgradfed/schedules.hpp"

namespace py = pybind11;
using namespace subgradfed;

namespace {

RunConfig parse_run_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(e.what());
  }
  CliConfig cfg = parse_cli_config(nlohmann::json{{"run", doc}});
  return *cfg.run;
}

py::dict log_to_dict(const MetricsLog& log) {
  std::vector<long> t;
  std::vector<double> gamma, fw, fx, bits, best;
  std::vector<py::object> lyap, full, avg;
  for (const auto& r : log.rows) {
    t.push_back(r.t);
    gamma.push_back(r.gamma);
    fw.push_back(r.f_subopt_w);
    fx.push_back(r.f_subopt_x);
    bits.push_back(r.bits_per_worker);
    best.push_back(r.best_f_subopt_w);
    lyap.push_back(r.lyapunov ? py::object(py::float_(*r.lyapunov)) : py::object(py::none()));
    full.push_back(r.full_round ? py::object(py::bool_(*r.full_round)) : py::object(py::none()));
    avg.push_back(r.f_subopt_avg ? py::object(py::float_(*r.f_subopt_avg)) : py::object(py::none()));
  }
  py::dict d;
  d["round"] = t;
  d["gamma"] = gamma;
  d["f_subopt_w"] = fw;
  d["f_subopt_x"] = fx;
  d["bits_per_worker"] = bits;
  d["best_f_subopt_w"] = best;
  d["lyapunov"] = lyap;
  d["full_round"] = full;
  if (log.has_average_column) d["f_subopt_avg"] = avg;
  d["rounds"] = log.rounds;
  d["diverged"] = log.diverged;
  d["diverged_round"] = log.diverged_round;
  return d;
}

py::tuple message(const CompressedVector& c) {
  return py::make_tuple(std::vector<std::size_t>(c.indices.begin(), c.indices.end()), c.values);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Compressed subgradient methods with server-to-worker compression";

  static py::exception<Error> base(m, "Error", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ConfigError& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    } catch (const DimensionError& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    } catch (const IoError& e) {
      PyErr_SetString(PyExc_OSError, e.what());
    } catch (const Error& e) {
      py::set_error(base, e.what());
    }
  });

  py::class_<Problem>(m, "Problem")
      .def_property_readonly("n", &Problem::n)
      .def_property_readonly("d", &Problem::d)
      .def_property_readonly("scales", &Problem::scales)
      .def_property_readonly("shift", &Problem::shift)
      .def_property_readonly("x0", &Problem::x0)
      .def_property_readonly("lipschitz", &Problem::lipschitz)
      .def_property_readonly("sigma_A", [](const Problem& p) { return p.constants().sigma_A; })
      .def_property_readonly("constants",
                             [](const Problem& p) {
                               const auto& c = p.constants();
                               py::dict d;
                               d["L0"] = c.L0;
                               d["L_bar"] = c.L_bar;
                               d["L_tilde"] = c.L_tilde;
                               d["sigma_A"] = c.sigma_A;
                               d["R0_sq"] = c.R0_sq;
                               return d;
                             })
      .def("f", [](const Problem& p, const Vector& x) { return f_value(p, x); }, py::arg("x"))
      .def("subgradient",
           [](const Problem& p, std::size_t i, const Vector& x) {
             if (i >= p.n()) throw DimensionError("worker index out of range");
             return subgradient_i(p, i, x);
           },
           py::arg("i"), py::arg("x"))
      .def("to_json", [](const Problem& p) { return problem_to_json(p).dump(); })
      .def_static("from_json",
                  [](const std::string& s) {
                    nlohmann::json j;
                    try {
                      j = nlohmann::json::parse(s);
                    } catch (const nlohmann::json::exception& e) {
                      throw ConfigError(e.what());
                    }
                    return problem_from_json(j);
                  })
      .def("save", [](const Problem& p, const std::filesystem::path& path) { save_problem(p, path); })
      .def_static("load", &load_problem);

  m.def("generate",
        [](std::size_t n, std::size_t d, double noise_scale, double mu, std::uint64_t seed) {
          return generate(GenConfig{n, d, mu, noise_scale, seed});
        },
        py::arg("n"), py::arg("d"), py::arg("noise_scale") = 0.0, py::arg("mu") = 1e-6,
        py::arg("seed") = 0);

  m.def("run",
        [](const Problem& p, const std::string& cfg) {
          RunConfig rc = parse_run_json(cfg);
          MetricsLog log;
          {
            py::gil_scoped_release release;
            log = run(p, rc);
          }
          return log_to_dict(log);
        },
        py::arg("problem"), py::arg("config_json"));

  m.def("tune",
        [](const Problem& p, const std::string& cfg, std::vector<double> grid, unsigned threads) {
          RunConfig rc = parse_run_json(cfg);
          if (grid.empty()) grid = default_factor_grid();
          TuneResult tr;
          {
            py::gil_scoped_release release;
            tr = tune(p, rc, grid, threads);
          }
          py::dict d;
          d["best_factor"] = tr.best_factor;
          d["final_subopt"] = tr.final_subopt;
          py::list per;
          for (const auto& f : tr.per_factor) {
            py::dict row;
            row["factor"] = f.factor;
            row["final_subopt"] = f.final_subopt;
            row["diverged"] = f.diverged;
            per.append(row);
          }
          d["per_factor"] = per;
          d["best_log"] = log_to_dict(tr.best_log);
          return d;
        },
        py::arg("problem"), py::arg("config_json"), py::arg("factor_grid") = std::vector<double>{},
        py::arg("threads") = 1);

  m.def("run_matrix",
        [](const std::string& matrix_json, const std::filesystem::path& out_dir, unsigned threads) {
          nlohmann::json doc;
          try {
            doc = nlohmann::json::parse(matrix_json);
          } catch (const nlohmann::json::exception& e) {
            throw ConfigError(e.what());
          }
          const ExperimentMatrix matrix = *parse_cli_config(nlohmann::json{{"matrix", doc}}).matrix;
          nlohmann::json manifest;
          {
            py::gil_scoped_release release;
            manifest = run_matrix(matrix, out_dir, threads);
          }
          return manifest.dump();
        },
        py::arg("matrix_json"), py::arg("out_dir"), py::arg("threads") = 1);

  m.def("compress_topk", [](const Vector& x, std::size_t k) { return message(compress_topk(x, k)); },
        py::arg("x"), py::arg("k"));
  m.def("compress_randk",
        [](const Vector& x, std::size_t k, std::uint64_t seed) {
          Rng rng(seed);
          return message(compress_randk(x, k, rng));
        },
        py::arg("x"), py::arg("k"), py::arg("seed") = 0);
  m.def("compress_permk",
        [](const Vector& x, std::size_t n, std::uint64_t seed) {
          Rng rng(seed);
          py::list out;
          for (const auto& msg : compress_permk_batch(x, n, rng)) out.append(message(msg));
          return out;
        },
        py::arg("x"), py::arg("n"), py::arg("seed") = 0);

  m.def("bits_for_message", &bits_for_message, py::arg("nnz"), py::arg("d"), py::arg("dense"));

  m.def("ef21p_constants", [](double alpha) {
    const auto c = TheoryConstantsEF21P::from_alpha(alpha);
    py::dict d;
    d["alpha"] = c.alpha;
    d["theta"] = c.theta;
    d["lambda_star"] = c.lambda_star;
    d["B_star"] = c.B_star;
    d["lyapunov_weight"] = c.lyapunov_weight;
    return d;
  }, py::arg("alpha"));
  m.def("marinap_constants",
        [](double omega, double p, double L_bar, double L_tilde) {
          const auto c = TheoryConstantsMarinaP::make(omega, p, L_bar, L_tilde);
          py::dict d;
          d["omega"] = c.omega;
          d["p"] = c.p;
          d["lambda_star"] = c.lambda_star;
          d["B_tilde_star"] = c.B_tilde_star;
          d["lyapunov_weight"] = c.lyapunov_weight;
          return d;
        },
        py::arg("omega"), py::arg("p"), py::arg("L_bar"), py::arg("L_tilde"));

  m.def("default_factor_grid", &default_factor_grid);
}
