#include "amdyn/cli/cli.hpp"

#include "amdyn/cli/selftest.hpp"
#include "amdyn/core/errors.hpp"
#include "amdyn/harness/analysis.hpp"
#include "amdyn/harness/records.hpp"
#include "amdyn/harness/sweep.hpp"
#include "amdyn/saddle/theory_io.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <chrono>
#include <functional>
#include <string>

namespace amdyn {

namespace {

/// Validation failures name the flag; prefix it the way it is spelled on the command line.
[[noreturn]] void rethrow_as_flag(const ContractViolation& e) {
  throw ContractViolation(std::string("--") + e.what());
}

void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
  } else {
    write_file_atomic(path, text);
  }
}

struct TheoryArgs {
  ModelConfig config;
  SolveOptions opts;
  int se_sections = 0;
  std::string out;
};

struct SimulateArgs {
  ModelConfig config;
  std::size_t seeds = 32;
  std::uint64_t first_seed = 1;
  std::string mode = "full";
  std::string solver = "auto";
  std::size_t workers = 0;
  std::string out;
  std::string manifest;
};

struct CompareArgs {
  std::string theory;
  std::string sim;
  int t_sum = 0;
  std::string out;
};

struct SweepArgs {
  std::string spec;
  std::string out_dir;
  std::size_t workers = 0;
};

void add_model_flags(CLI::App* cmd, ModelConfig& c) {
  cmd->add_option("--kappa", c.kappa, "sample ratio P/N")->capture_default_str();
  cmd->add_option("--m0", c.m0, "initial overlap of u with u_star")->capture_default_str();
  cmd->add_option("--lambda", c.lambda, "ridge strength")->capture_default_str();
  cmd->add_option("--T", c.t_max, "number of AM iterations")->capture_default_str();
}

int run_theory(const TheoryArgs& a, std::ostream& out, std::ostream& err) {
  try {
    validate_theory_config(a.config);
    a.opts.validate();
    require(a.se_sections == 0 || a.se_sections >= 2, "se-sections: must be 0 or >= 2");
  } catch (const ContractViolation& e) {
    rethrow_as_flag(e);
  }
  SolveResult res = solve(a.config, a.opts);
  if (a.se_sections >= 2) {
    res.trajectory_se = estimate_trajectory_errors(a.config, a.opts, a.se_sections);
  }
  emit(a.out, theory_to_json(res).dump(2) + "\n", out);
  err << "theory: solved T=" << a.config.t_max << " in " << res.wall_seconds << " s\n";
  return kExitOk;
}

int run_simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err) {
  AmMode mode;
  AmOptions opts;
  try {
    a.config.validate();
    mode = parse_am_mode(a.mode);
    require(a.seeds >= 1, "seeds: must be >= 1");
    if (a.solver == "cholesky") opts.solver.kind = LinearSolver::cholesky;
    else if (a.solver == "cg") opts.solver.kind = LinearSolver::cg;
    else require(a.solver == "auto", "solver: expected auto, cholesky or cg");
  } catch (const ContractViolation& e) {
    rethrow_as_flag(e);
  }
  const auto start = std::chrono::steady_clock::now();
  const std::vector<std::uint64_t> seeds = seed_range(a.first_seed, a.seeds);
  const std::vector<RunRecord> records = simulate_seeds(a.config, mode, seeds, a.workers, opts);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  emit(a.out, records_to_csv(records), out);

  std::string manifest = a.manifest;
  if (manifest.empty() && !a.out.empty() && a.out != "-") manifest = a.out + ".manifest.json";
  if (!manifest.empty()) {
    const nlohmann::json doc = {{"kind", "amdyn.simulate"},
                                {"version", 1},
                                {"code_version", kCodeVersion},
                                {"config",
                                 {{"n", a.config.n},
                                  {"kappa", a.config.kappa},
                                  {"lambda", a.config.lambda},
                                  {"m0", a.config.m0},
                                  {"T", a.config.t_max}}},
                                {"mode", to_string(mode)},
                                {"solver", a.solver},
                                {"seeds", seeds},
                                {"wall_seconds", wall}};
    write_file_atomic(manifest, doc.dump(2) + "\n");
  }
  err << "simulate: " << seeds.size() << " seeds in " << wall << " s\n";
  return kExitOk;
}

int run_compare(const CompareArgs& a, std::ostream& out, std::ostream&) {
  const SolveResult theory = read_theory(a.theory);
  const std::vector<RunRecord> sims = read_records(a.sim);
  const int t_sum = a.t_sum > 0 ? a.t_sum : static_cast<int>(theory.m_cos.size());
  nlohmann::json report;
  try {
    report = compare_report(theory, sims, t_sum);
  } catch (const ContractViolation& e) {
    const std::string what = e.what();
    if (what.rfind("t-sum:", 0) == 0) rethrow_as_flag(e);
    throw;
  }
  emit(a.out, report.dump(2) + "\n", out);
  return kExitOk;
}

int run_sweep_cmd(const SweepArgs& a, std::ostream& out, std::ostream& err) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_file(a.spec));
  } catch (const nlohmann::json::exception& e) {
    throw ContractViolation("--spec: " + std::string(e.what()));
  }
  SweepSpec spec = sweep_spec_from_json(doc);
  if (a.workers != 0) spec.workers = a.workers;
  const SweepSummary s = run_sweep(spec, a.out_dir, &err);
  out << "{\"manifest\": \"" << s.manifest_path << "\", \"computed\": " << s.computed
      << ", \"skipped\": " << s.skipped << ", \"failed\": " << s.failed << "}\n";
  return s.failed == 0 ? kExitOk : kExitNumerical;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Alternating minimization dynamics: theory, simulation and experiment harness",
               "amdyn"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kCodeVersion);

  std::function<int()> action;

  TheoryArgs ta;
  ta.config.t_max = 20;
  auto* theory = app.add_subcommand("theory", "solve the dynamical order parameters");
  add_model_flags(theory, ta.config);
  theory->add_option("--n-mc", ta.opts.n_mc, "Monte-Carlo sample paths")->capture_default_str();
  theory->add_option("--damping", ta.opts.damping, "fixed-point damping in (0, 1]")
      ->capture_default_str();
  theory->add_option("--tol", ta.opts.tol, "relative-change stopping tolerance")
      ->capture_default_str();
  theory->add_option("--max-inner-iters", ta.opts.max_inner_iters)->capture_default_str();
  theory->add_option("--buckets", ta.opts.buckets, "median-of-means buckets")
      ->capture_default_str();
  theory->add_option("--seed", ta.opts.seed)->capture_default_str();
  theory->add_option("--max-memory-gb", ta.opts.max_memory_gb)->capture_default_str();
  theory->add_option("--se-sections", ta.se_sections,
                     "also estimate trajectory standard errors from this many sections");
  theory->add_option("--workers", ta.opts.workers, "worker threads (default AMDYN_WORKERS or all cores)");
  theory->add_option("--out", ta.out, "output JSON file (default stdout)");
  theory->callback([&]() { action = [&]() { return run_theory(ta, out, err); }; });

  SimulateArgs sa;
  auto* simulate = app.add_subcommand("simulate", "run alternating minimization at finite N");
  simulate->add_option("--n", sa.config.n, "dimension N")->capture_default_str();
  add_model_flags(simulate, sa.config);
  simulate->add_option("--seeds", sa.seeds, "number of seeds")->capture_default_str();
  simulate->add_option("--first-seed", sa.first_seed)->capture_default_str();
  simulate->add_option("--mode", sa.mode, "full or online")->capture_default_str();
  simulate->add_option("--solver", sa.solver, "auto, cholesky or cg")->capture_default_str();
  simulate->add_option("--workers", sa.workers, "seeds run concurrently");
  simulate->add_option("--out", sa.out, "output CSV file (default stdout)");
  simulate->add_option("--manifest", sa.manifest, "run manifest (default <out>.manifest.json)");
  simulate->callback([&]() { action = [&]() { return run_simulate(sa, out, err); }; });

  CompareArgs ca;
  auto* compare = app.add_subcommand("compare", "compare a theory file with simulation records");
  compare->add_option("--theory", ca.theory, "theory JSON")->required();
  compare->add_option("--sim", ca.sim, "simulation CSV")->required();
  compare->add_option("--t-sum", ca.t_sum, "steps in delta m^2 (default: T of the theory)");
  compare->add_option("--out", ca.out, "report JSON (default stdout)");
  compare->callback([&]() { action = [&]() { return run_compare(ca, out, err); }; });

  SweepArgs wa;
  auto* sweep = app.add_subcommand("sweep", "run or resume a grid of theory and simulation cells");
  sweep->add_option("--spec", wa.spec, "sweep spec JSON")->required();
  sweep->add_option("--out-dir", wa.out_dir, "output directory")->required();
  sweep->add_option("--workers", wa.workers, "worker budget (overrides the spec)");
  sweep->callback([&]() { action = [&]() { return run_sweep_cmd(wa, out, err); }; });

  SelftestOptions so;
  auto* selftest = app.add_subcommand("selftest", "quadrature oracle and finite-difference checks");
  selftest->add_option("--n-mc", so.n_mc, "paths of the oracle comparison")->capture_default_str();
  selftest->add_option("--sections", so.sections)->capture_default_str();
  selftest->add_option("--fd-n-mc", so.fd_n_mc)->capture_default_str();
  selftest->add_option("--seed", so.seed)->capture_default_str();
  selftest->add_option("--workers", so.workers);
  selftest->callback([&]() {
    action = [&]() {
      require(so.n_mc >= 1, "--n-mc: must be >= 1");
      require(so.fd_n_mc >= 100, "--fd-n-mc: must be >= 100");
      require(so.sections >= 2, "--sections: must be >= 2");
      return run_selftest(so, out) ? kExitOk : kExitNumerical;
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kCodeVersion << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }

  try {
    return action();
  } catch (const ContractViolation& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const NumericalFailure& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }
}

}  // namespace amdyn
