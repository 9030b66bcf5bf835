#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>

#include "slq/config.hpp"
#include "slq/errors.hpp"
#include "slq/irl_model_based.hpp"
#include "slq/lq_core.hpp"
#include "slq/matops.hpp"
#include "slq/runner.hpp"

namespace py = pybind11;
using namespace slq;

namespace {

py::dict report_to_dict(const RunReport& rep) {
  py::dict d;
  d["converged"] = rep.converged;
  d["iterations"] = rep.iterations;
  d["gain_gap"] = rep.gain_gap;
  d["eq11"] = rep.eq11;
  d["eq13"] = rep.eq13;
  d["eq25"] = rep.nonuniqueness.eq25;
  d["eq26"] = rep.nonuniqueness.eq26;
  d["eq25_rel"] = rep.nonuniqueness.eq25_rel;
  d["eq26_rel"] = rep.nonuniqueness.eq26_rel;
  d["wall_seconds"] = rep.wall_seconds;
  d["artifacts"] = rep.artifacts;
  return d;
}

}  // namespace

PYBIND11_MODULE(slqpy, m) {
  m.doc() = "Inverse reinforcement learning for stochastic LQ systems";

  py::register_exception<ConfigError>(m, "ConfigError");
  py::register_exception<ExcitationError>(m, "ExcitationError");
  py::register_exception<ConvergenceError>(m, "ConvergenceError");
  py::register_exception<NumericalError>(m, "NumericalError");

  py::class_<SystemDynamics>(m, "System")
      .def(py::init([](Mat A, Mat B, Mat C, Mat D) {
             SystemDynamics sys{std::move(A), std::move(B), std::move(C), std::move(D)};
             sys.validate();
             return sys;
           }),
           py::arg("A"), py::arg("B"), py::arg("C"), py::arg("D"))
      .def_readonly("A", &SystemDynamics::A)
      .def_readonly("B", &SystemDynamics::B)
      .def_readonly("C", &SystemDynamics::C)
      .def_readonly("D", &SystemDynamics::D)
      .def_property_readonly("n", &SystemDynamics::n)
      .def_property_readonly("m", &SystemDynamics::m)
      .def("__repr__", [](const SystemDynamics& s) {
        return "System(n=" + std::to_string(s.n()) + ", m=" + std::to_string(s.m()) + ")";
      });

  m.def("svec", [](const Mat& P) { return svec(P); }, py::arg("P"),
        "Packed upper triangle, off-diagonals doubled");
  m.def("smat", [](const Vec& v, int n) { return smat(v, n); }, py::arg("v"), py::arg("n"));
  m.def("xbar", [](const Vec& x) { return xbar(x); }, py::arg("x"));
  m.def("duplication_map", &duplication_map, py::arg("n"));
  m.def("lbar", [](const Mat& L) { return lbar(L); }, py::arg("L"));

  m.def("is_ms_stabilizing",
        [](const SystemDynamics& sys, const Mat& K) { return is_ms_stabilizing(sys, K); },
        py::arg("system"), py::arg("K"));
  m.def("ms_spectral_abscissa",
        [](const SystemDynamics& sys, const Mat& K) { return ms_spectral_abscissa(sys, K); },
        py::arg("system"), py::arg("K"));
  m.def("solve_lyapunov",
        [](const SystemDynamics& sys, const Mat& K, const Mat& M) {
          return solve_lyapunov(sys, K, M);
        },
        py::arg("system"), py::arg("K"), py::arg("M"),
        "Solves P A_cl + A_cl' P + C_cl' P C_cl = -M for the closed loop under K");
  m.def("optimal_gain",
        [](const SystemDynamics& sys, const Mat& P, const Mat& R) {
          return optimal_gain(sys, P, R);
        },
        py::arg("system"), py::arg("P"), py::arg("R"));

  m.def("solve_sare",
        [](const SystemDynamics& sys, const Mat& Q, const Mat& R, const Mat& K_init,
           double tol, int max_iter) {
          SareOptions opts;
          opts.tol = tol;
          opts.max_iter = max_iter;
          const SareResult res = solve_sare(sys, CostWeights{Q, R}, K_init, opts);
          py::dict d;
          d["P"] = res.P;
          d["K"] = res.K;
          d["iterations"] = res.iterations;
          d["residual"] = res.residual;
          return d;
        },
        py::arg("system"), py::arg("Q"), py::arg("R"), py::arg("K_init"),
        py::arg("tol") = 1e-10, py::arg("max_iter") = 200,
        "Stochastic Kleinman iteration; K_init must be mean-square stabilizing");

  m.def("theorem1_residuals",
        [](const SystemDynamics& sys, const Mat& Q, const Mat& R, const Mat& P, const Mat& K_T) {
          return theorem1_residuals(sys, CostWeights{Q, R}, P, K_T);
        },
        py::arg("system"), py::arg("Q"), py::arg("R"), py::arg("P"), py::arg("K_T"),
        "Returns (SARE residual, gain residual) for a candidate (Q, R, P)");

  m.def("run_model_based_irl",
        [](const SystemDynamics& sys, const Mat& R, const Mat& Q0, const Mat& K_T, double eps1,
           double gain_tol, long max_iter, const std::string& stop_mode) {
          IrlOptions opts;
          opts.eps1 = eps1;
          opts.gain_tol = gain_tol;
          opts.max_iter = max_iter;
          opts.stop = parse_stop_mode(stop_mode);
          const IrlResult res = run_model_based_irl(sys, R, Q0, K_T, opts);
          py::dict d;
          d["Q_star"] = res.Q_star;
          d["P_star"] = res.P_star;
          d["K_star"] = res.K_star;
          d["iterations"] = res.iterations;
          d["converged"] = res.converged;
          d["min_monotone_eig"] = res.min_monotone_eig;
          d["all_stabilizing"] = res.all_stabilizing;
          d["final_dq"] = res.final_dq;
          d["final_dk"] = res.final_dk;
          return d;
        },
        py::arg("system"), py::arg("R"), py::arg("Q0"), py::arg("K_T"), py::arg("eps1") = 1e-6,
        py::arg("gain_tol") = 0.01, py::arg("max_iter") = 100, py::arg("stop_mode") = "qdiff",
        "Model-based weight reconstruction for a known expert gain K_T");

  m.def("run_experiment",
        [](const std::string& config_path, std::optional<std::uint64_t> seed,
           std::optional<std::string> out, bool exact_functionals) {
          RunFlags flags;
          flags.seed_override = seed;
          flags.out_override = std::move(out);
          flags.exact_functionals = exact_functionals;
          return report_to_dict(run_experiment(config_path, flags));
        },
        py::arg("config_path"), py::arg("seed") = py::none(), py::arg("out") = py::none(),
        py::arg("exact_functionals") = false,
        "Full pipeline from a TOML config; returns the run report as a dict");

  m.def("compare_algorithms",
        [](const std::string& config_path, std::optional<std::uint64_t> seed,
           std::optional<std::string> out, bool exact_functionals) {
          RunFlags flags;
          flags.seed_override = seed;
          flags.out_override = std::move(out);
          flags.exact_functionals = exact_functionals;
          return report_to_dict(compare_algorithms(config_path, flags));
        },
        py::arg("config_path"), py::arg("seed") = py::none(), py::arg("out") = py::none(),
        py::arg("exact_functionals") = false,
        "Runs both algorithms on one config and emits the paired-gap CSV");
}
