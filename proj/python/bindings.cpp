#include "amdyn/cli/cli.hpp"
#include "amdyn/core/errors.hpp"
#include "amdyn/harness/analysis.hpp"
#include "amdyn/harness/records.hpp"
#include "amdyn/harness/sweep.hpp"
#include "amdyn/saddle/prox.hpp"
#include "amdyn/saddle/solve.hpp"
#include "amdyn/saddle/theory_io.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace amdyn;

namespace {

ModelConfig make_config(std::size_t n, double kappa, double lambda, double m0, int t_max) {
  ModelConfig c;
  c.n = n;
  c.kappa = kappa;
  c.lambda = lambda;
  c.m0 = m0;
  c.t_max = t_max;
  return c;
}

std::vector<RunRecord> records_of(const std::string& csv) { return records_from_csv(csv); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Alternating-minimization dynamics: simulation, saddle-point theory, analysis";

  static py::exception<ContractViolation> contract(m, "ContractViolation", PyExc_ValueError);
  static py::exception<NumericalFailure> numerical(m, "NumericalFailure", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ContractViolation& e) {
      contract(e.what());
    } catch (const NumericalFailure& e) {
      numerical(e.what());
    }
  });

  m.attr("code_version") = kCodeVersion;

  m.def(
      "theory_json",
      [](double kappa, double m0, double lambda, int t_max, std::size_t n_mc, double damping,
         double tol, int max_inner_iters, std::uint64_t seed, std::size_t workers) {
        SolveOptions o;
        o.n_mc = n_mc;
        o.damping = damping;
        o.tol = tol;
        o.max_inner_iters = max_inner_iters;
        o.seed = seed;
        o.workers = workers;
        py::gil_scoped_release release;
        return theory_to_json(solve(make_config(1, kappa, lambda, m0, t_max), o)).dump();
      },
      py::arg("kappa"), py::arg("m0"), py::arg("lambda_") = 0.01, py::arg("T") = 20,
      py::arg("n_mc") = 1'000'000, py::arg("damping") = 0.5, py::arg("tol") = 1e-6,
      py::arg("max_inner_iters") = 200, py::arg("seed") = 1, py::arg("workers") = 0,
      "Solves the saddle-point equations; returns the theory document as JSON text.");

  m.def(
      "simulate_csv",
      [](std::size_t n, double kappa, double m0, double lambda, int t_max, std::size_t seeds,
         std::uint64_t first_seed, const std::string& mode, std::size_t workers) {
        const ModelConfig c = make_config(n, kappa, lambda, m0, t_max);
        c.validate();
        const AmMode am_mode = parse_am_mode(mode);
        py::gil_scoped_release release;
        return records_to_csv(simulate_seeds(c, am_mode, seed_range(first_seed, seeds), workers));
      },
      py::arg("n"), py::arg("kappa"), py::arg("m0"), py::arg("lambda_") = 0.01,
      py::arg("T") = 20, py::arg("seeds") = 1, py::arg("first_seed") = 1,
      py::arg("mode") = "full", py::arg("workers") = 0,
      "Runs AM on independent instances; returns the per-seed trajectories as CSV text.");

  m.def(
      "compare_json",
      [](const std::string& theory_json, const std::string& sim_csv, int t_sum) {
        const SolveResult th = theory_from_json(nlohmann::json::parse(theory_json));
        const int t = t_sum > 0 ? t_sum : th.config.t_max;
        return compare_report(th, records_of(sim_csv), t).dump();
      },
      py::arg("theory_json"), py::arg("sim_csv"), py::arg("t_sum") = 0,
      "Comparison report of a theory document and simulation CSV, as JSON text; t_sum 0 uses T.");

  m.def(
      "delta_m2",
      [](const std::vector<double>& theory_m, const std::vector<std::vector<double>>& runs,
         int t_sum) {
        const DeltaM2 d = delta_m2(theory_m, runs, t_sum);
        return py::make_tuple(d.value, d.se);
      },
      py::arg("theory_m"), py::arg("sim_runs"), py::arg("t_sum"),
      "Mean over seeds of the summed squared deviation; returns (value, standard error).");

  m.def(
      "normalize_delta",
      [](const std::vector<double>& kappas, const std::vector<double>& deltas,
         std::pair<double, double> window) {
        const NormalizedDelta d = normalize_delta(kappas, deltas, window);
        return py::make_tuple(d.normalized, d.integral);
      },
      py::arg("kappas"), py::arg("deltas"), py::arg("window"),
      "Returns (normalized curve, trapezoid integral over the window).");

  m.def("default_kappa_window", &default_kappa_window, py::arg("m0"));

  m.def(
      "run_sweep",
      [](const std::string& spec_json, const std::string& out_dir) {
        const SweepSpec spec = sweep_spec_from_json(nlohmann::json::parse(spec_json));
        SweepSummary s;
        {
          py::gil_scoped_release release;
          s = run_sweep(spec, out_dir);
        }
        return py::make_tuple(s.computed, s.skipped, s.failed, s.manifest_path);
      },
      py::arg("spec_json"), py::arg("out_dir"),
      "Runs or resumes a sweep; returns (computed, skipped, failed, manifest path).");

  m.def(
      "prox",
      [](const std::string& side, double a, double b, double y, double chi) {
        require(side == "u" || side == "v", "side: must be 'u' or 'v'");
        const ProxResult r = side == "u" ? prox_u(a, b, y, chi) : prox_v(a, b, y, chi);
        return py::make_tuple(r.value, r.d_a, r.d_b, r.d_y);
      },
      py::arg("side"), py::arg("a"), py::arg("b"), py::arg("y"), py::arg("chi"),
      "Quadratic-loss proximal step; returns (minimizer, d/da, d/db, d/dy).");

  m.def(
      "cli",
      [](const std::vector<std::string>& args) {
        std::vector<const char*> argv{"amdyn"};
        for (const std::string& a : args) argv.push_back(a.c_str());
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the command line in-process; returns (exit code, stdout, stderr).");
}
