// Python bindings for the free-pressure laboratory core.

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fplab/duality.hpp"
#include "fplab/equilibrium.hpp"
#include "fplab/experiment.hpp"
#include "fplab/gibbs.hpp"
#include "fplab/matrixmc.hpp"
#include "fplab/measures.hpp"
#include "fplab/ncpoly.hpp"

namespace py = pybind11;
using namespace fplab;

namespace {

NCPolynomial poly_from_text(const std::string& text) { return NCPolynomial::from_text(text); }

py::dict measure_to_dict(const DiscreteMeasure& mu) {
  py::dict d;
  d["R"] = mu.R;
  d["nodes"] = mu.nodes;
  d["weights"] = mu.weights;
  d["kind"] = density_kind_name(mu.kind);
  return d;
}

DiscreteMeasure measure_from_args(const std::string& kind, const std::vector<double>& params,
                                  int gridsize, double enclosing_R) {
  return make_measure(density_kind_from_name(kind), params, gridsize, enclosing_R);
}

py::dict equilibrium_to_dict(const EquilibriumResult& r) {
  py::dict d;
  d["pressure"] = r.pressure;
  d["frostman_constant"] = r.frostman_constant;
  d["residual_on_support"] = r.residual_on_support;
  d["residual_off_support"] = r.residual_off_support;
  d["iterations"] = r.iterations;
  d["converged"] = r.converged;
  d["nodes"] = r.sigma.nodes;
  d["weights"] = r.sigma.weights;
  d["csv"] = equilibrium_to_csv(r);
  return d;
}

py::dict pressure_to_dict(const MicroPressureResult& r) {
  py::dict d;
  d["value"] = r.value;
  d["stderr"] = r.se;
  d["scaled"] = r.scaled;
  d["scaled_stderr"] = r.scaled_se;
  d["n"] = r.n;
  d["N"] = r.N;
  d["R"] = r.R;
  d["mixing_ok"] = r.mixing_ok;
  d["exact"] = r.exact;
  return d;
}

Schedule schedule_from_kwargs(int beta_nodes, int chains, int warmup, int node_warmup,
                              int samples, int thin) {
  Schedule s;
  s.panels = {{0.0, 1.0, beta_nodes}};
  s.chains = chains;
  s.warmup_sweeps = warmup;
  s.node_warmup = node_warmup;
  s.sample_sweeps = samples;
  s.thin = thin;
  return s;
}

}  // namespace

PYBIND11_MODULE(_fplab, m) {
  m.doc() = "free pressure of noncommutative polynomial potentials: exact norm-ball "
            "volumes, equilibrium measures, Gibbs-ensemble Monte Carlo and "
            "Legendre-transform duality checks";

  py::class_<NCPolynomial>(m, "NCPolynomial")
      .def(py::init(&poly_from_text), py::arg("text"))
      .def_static("from_text", &poly_from_text)
      .def("to_text", &NCPolynomial::to_text)
      .def("adjoint", &NCPolynomial::adjoint)
      .def("is_selfadjoint", &NCPolynomial::is_selfadjoint, py::arg("tol") = kSelfadjointTol)
      .def("nvars", &NCPolynomial::nvars)
      .def("degree", &NCPolynomial::degree)
      .def("dilate", &NCPolynomial::dilate, py::arg("R"), py::arg("R1"))
      .def("norm_upper_bound", &NCPolynomial::norm_upper_bound, py::arg("R"))
      .def("sup_norm",
           [](const NCPolynomial& p, double R, uint64_t seed) {
             SupNormBudget b;
             b.seed = seed;
             auto r = p.sup_norm(R, b);
             py::dict d;
             d["value"] = r.value;
             d["upper_bound"] = r.upper_bound;
             d["exact"] = r.exact;
             d["witness_dim"] = r.witness_dim;
             return d;
           },
           py::arg("R"), py::arg("seed") = 1)
      .def("evaluate",
           [](const NCPolynomial& p, const std::vector<Matrix>& mats, double R) {
             return p.evaluate(MatrixTuple(mats, R));
           },
           py::arg("mats"), py::arg("R"))
      .def("trace_eval",
           [](const NCPolynomial& p, const std::vector<Matrix>& mats, double R) {
             return p.trace_eval(MatrixTuple(mats, R));
           },
           py::arg("mats"), py::arg("R"))
      .def("__add__", [](const NCPolynomial& a, const NCPolynomial& b) { return a + b; })
      .def("__mul__", [](const NCPolynomial& a, Complex c) { return a * c; })
      .def("__repr__", [](const NCPolynomial& p) { return p.to_text(); });

  m.def("log_ball_volume", &log_ball_volume, py::arg("n"), py::arg("R"),
        "exact log Lambda_n of the operator-norm ball");
  m.def("log_ball_volume_limit", &log_ball_volume_limit, py::arg("R"));

  m.def("make_measure", &measure_from_args, py::arg("kind"), py::arg("params"),
        py::arg("gridsize"), py::arg("enclosing_R") = 0.0);
  m.def("log_energy", [](const std::string& kind, const std::vector<double>& params,
                         int gridsize) { return log_energy(measure_from_args(kind, params, gridsize, 0.0)); });
  m.def("measure_log_energy",
        [](const std::vector<double>& nodes, const std::vector<double>& weights, double R) {
          DiscreteMeasure mu;
          mu.R = R;
          mu.nodes = nodes;
          mu.weights = weights;
          return log_energy(mu);
        });
  m.def("chi_of_measure", [](const std::string& kind, const std::vector<double>& params,
                             int gridsize) { return chi(measure_from_args(kind, params, gridsize, 0.0)); });
  m.def("measure_dict", [](const std::string& kind, const std::vector<double>& params,
                           int gridsize, double enclosing) {
    return measure_to_dict(measure_from_args(kind, params, gridsize, enclosing));
  }, py::arg("kind"), py::arg("params"), py::arg("gridsize"), py::arg("enclosing_R") = 0.0);
  m.def("moment_of_measure", [](const std::string& kind, const std::vector<double>& params,
                                int gridsize, int k) {
    return moment(measure_from_args(kind, params, gridsize, 0.0), k);
  });

  m.def("solve_equilibrium",
        [](const NCPolynomial& h, double R, int grid) {
          EquilibriumOptions opts;
          opts.grid = grid;
          return equilibrium_to_dict(solve_equilibrium(PotentialFn::from_poly(h, R), opts));
        },
        py::arg("h"), py::arg("R"), py::arg("grid") = 800);

  m.def("chi_via_legendre",
        [](const std::string& kind, const std::vector<double>& params, int gridsize, double R,
           int grid) {
          EquilibriumOptions opts;
          opts.grid = grid;
          auto mu = measure_from_args(kind, params, gridsize, R);
          auto r = chi_via_legendre(mu, R, opts);
          py::dict d;
          d["value"] = r.value;
          d["is_upper_bound"] = r.is_upper_bound;
          return d;
        },
        py::arg("kind"), py::arg("params"), py::arg("gridsize"), py::arg("R"),
        py::arg("grid") = 800);

  m.def("sample_uniform_ball",
        [](int n, double R, int count, uint64_t seed) {
          return sample_uniform_ball(n, R, count, seed);
        },
        py::arg("n"), py::arg("R"), py::arg("count"), py::arg("seed"));

  m.def("estimate_micro_pressure",
        [](const NCPolynomial& h, int N, int n, double R, uint64_t seed, int beta_nodes,
           int chains, int warmup, int node_warmup, int samples, int thin, int jobs) {
          return pressure_to_dict(estimate_micro_pressure(
              h, N, n, R,
              schedule_from_kwargs(beta_nodes, chains, warmup, node_warmup, samples, thin), seed,
              jobs));
        },
        py::arg("h"), py::arg("N"), py::arg("n"), py::arg("R"), py::arg("seed"),
        py::arg("beta_nodes") = 16, py::arg("chains") = 2, py::arg("warmup") = 1000,
        py::arg("node_warmup") = 300, py::arg("samples") = 1500, py::arg("thin") = 2,
        py::arg("jobs") = 1);

  m.def("extrapolate_pressure",
        [](const std::vector<std::tuple<int, double, double>>& records) {
          std::vector<PerNRecord> recs;
          for (const auto& [n, v, e] : records) recs.push_back({n, v, e});
          auto est = extrapolate_pressure(recs);
          py::dict d;
          d["extrapolated"] = est.extrapolated;
          d["stderr"] = est.extrapolated_se;
          d["c1"] = est.c1;
          d["fit_residual"] = est.fit_residual;
          return d;
        });

  m.def("eta_upper_exact",
        [](const std::string& kind, const std::vector<double>& params, int gridsize, double R,
           const std::vector<NCPolynomial>& family, int grid) {
          EquilibriumOptions opts;
          opts.grid = grid;
          EquilibriumBackend backend(R, 1, opts);
          auto mu = measure_from_args(kind, params, gridsize, R);
          auto est = eta_upper(mu, family, R, backend);
          py::dict d;
          d["minimum"] = est.minimum;
          d["argmin"] = est.argmin;
          d["upper_bound"] = est.upper_bound;
          return d;
        },
        py::arg("kind"), py::arg("params"), py::arg("gridsize"), py::arg("R"), py::arg("family"),
        py::arg("grid") = 800);

  m.def("free_semicircular_moment",
        [](const std::vector<int>& letters, const std::vector<double>& variances) {
          std::vector<int> zero_based = letters;
          return free_semicircular_moment(Word(zero_based), variances);
        },
        py::arg("letters"), py::arg("variances"),
        "mixed moment of free centered semicirculars; letters are 0-based");

  m.def("microstate_log_volume",
        [](const std::vector<std::pair<std::string, double>>& targets, double eps, double R,
           int n, long samples, uint64_t seed) {
          MicrostateSpecParams spec;
          spec.eps = eps;
          spec.R = R;
          for (const auto& [w, v] : targets) spec.target.set(Word::parse(w), v);
          auto r = microstate_volume(spec, n, samples, seed);
          py::dict d;
          d["log_volume"] = r.log_volume;
          d["stderr"] = r.se;
          d["hits"] = r.hits;
          d["empty"] = r.empty;
          d["upper_bound"] = r.upper_bound;
          return d;
        },
        py::arg("targets"), py::arg("eps"), py::arg("R"), py::arg("n"), py::arg("samples"),
        py::arg("seed"));

  m.def("divergence_certificate",
        [](const std::vector<std::pair<std::string, double>>& values, double R)
            -> py::object {
          MomentSpec mu;
          for (const auto& [w, v] : values) {
            Word word = Word::parse(w);
            if (word.is_one())
              mu.values[word] = v;
            else
              mu.set(word, v);
          }
          auto cert = divergence_certificate(mu, R);
          if (!cert) return py::none();
          py::dict d;
          d["kind"] = violation_kind_name(cert->kind);
          d["direction"] = cert->direction.to_text();
          d["alphas"] = cert->alphas;
          d["objectives"] = cert->objectives;
          d["detail"] = cert->detail;
          return d;
        },
        py::arg("values"), py::arg("R"));

  m.def("run_experiment_config",
        [](const std::string& config_text, const std::string& out_dir, uint64_t seed, int jobs) {
          auto cfg = ExperimentConfig::parse(config_text);
          RunOptions opt;
          opt.out_dir = out_dir;
          if (seed != 0) opt.seed_override = seed;
          opt.jobs = jobs;
          return run_experiment(cfg, opt);
        },
        py::arg("config_text"), py::arg("out_dir"), py::arg("seed") = 0, py::arg("jobs") = 1);

  m.attr("__version__") = "0.1.0";
}
