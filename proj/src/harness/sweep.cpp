#include "amdyn/harness/sweep.hpp"

#include "amdyn/core/errors.hpp"
#include "amdyn/harness/records.hpp"
#include "amdyn/saddle/theory_io.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>

namespace amdyn {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt_num(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

template <class T>
void read_opt(const json& doc, const char* key, T& out) {
  if (doc.contains(key)) out = doc.at(key).get<T>();
}

}  // namespace

std::vector<double> SweepSpec::kappas() const {
  std::vector<double> out;
  for (int i = 0;; ++i) {
    const double k = kappa_start + i * kappa_step;
    if (k > kappa_stop + 1e-9 * kappa_step) break;
    out.push_back(std::round(k * 1e9) / 1e9);
  }
  return out;
}

void SweepSpec::validate() const {
  require(!m0.empty(), "m0: the sweep needs at least one value");
  for (double m : m0) require(m >= -1.0 && m <= 1.0, "m0: values must lie in [-1, 1]");
  require(std::isfinite(kappa_step) && kappa_step > 0.0, "kappa.step: must be positive");
  require(std::isfinite(kappa_start) && kappa_start >= 0.0, "kappa.start: must be >= 0");
  require(std::isfinite(kappa_stop) && kappa_stop >= kappa_start,
          "kappa.stop: must be >= kappa.start");
  require(t_max >= 1, "T: must be >= 1");
  require(std::isfinite(lambda) && lambda > 0.0, "lambda: must be a positive number");
  require(theory || sim || online, "engines: enable at least one of theory, sim, online");
  if (sim || online) {
    require(!n.empty(), "n: simulation cells need at least one N");
    for (std::size_t v : n) require(v >= 1, "n: values must be >= 1");
    require(seeds >= 1, "seeds: must be >= 1");
  }
  if (theory) theory_opts.validate();
}

json sweep_spec_to_json(const SweepSpec& spec) {
  const SolveOptions& o = spec.theory_opts;
  return {{"m0", spec.m0},
          {"kappa", {{"start", spec.kappa_start}, {"stop", spec.kappa_stop}, {"step", spec.kappa_step}}},
          {"n", spec.n},
          {"seeds", spec.seeds},
          {"first_seed", spec.first_seed},
          {"T", spec.t_max},
          {"lambda", spec.lambda},
          {"engines", {{"theory", spec.theory}, {"sim", spec.sim}, {"online", spec.online}}},
          {"theory_opts",
           {{"n_mc", o.n_mc},
            {"damping", o.damping},
            {"tol", o.tol},
            {"max_inner_iters", o.max_inner_iters},
            {"seed", o.seed},
            {"buckets", o.buckets}}},
          {"solver",
           {{"kind", spec.am_opts.solver.kind == LinearSolver::cholesky ? "cholesky"
                     : spec.am_opts.solver.kind == LinearSolver::cg     ? "cg"
                                                                        : "auto"},
            {"cg_min_n", spec.am_opts.solver.cg_min_n}}}};
}

SweepSpec sweep_spec_from_json(const json& doc) {
  SweepSpec spec;
  try {
    require(doc.is_object(), "spec: expected a JSON object");
    spec.m0 = doc.at("m0").get<std::vector<double>>();
    const json& k = doc.at("kappa");
    spec.kappa_start = k.at("start").get<double>();
    spec.kappa_stop = k.at("stop").get<double>();
    spec.kappa_step = k.at("step").get<double>();
    read_opt(doc, "n", spec.n);
    read_opt(doc, "seeds", spec.seeds);
    read_opt(doc, "first_seed", spec.first_seed);
    read_opt(doc, "T", spec.t_max);
    read_opt(doc, "lambda", spec.lambda);
    if (doc.contains("engines")) {
      const json& e = doc.at("engines");
      read_opt(e, "theory", spec.theory);
      read_opt(e, "sim", spec.sim);
      read_opt(e, "online", spec.online);
    }
    if (doc.contains("theory_opts")) {
      const json& o = doc.at("theory_opts");
      read_opt(o, "n_mc", spec.theory_opts.n_mc);
      read_opt(o, "damping", spec.theory_opts.damping);
      read_opt(o, "tol", spec.theory_opts.tol);
      read_opt(o, "max_inner_iters", spec.theory_opts.max_inner_iters);
      read_opt(o, "seed", spec.theory_opts.seed);
      read_opt(o, "buckets", spec.theory_opts.buckets);
    }
    if (doc.contains("solver")) {
      const json& s = doc.at("solver");
      if (s.contains("kind")) {
        const std::string kind = s.at("kind").get<std::string>();
        if (kind == "cholesky") spec.am_opts.solver.kind = LinearSolver::cholesky;
        else if (kind == "cg") spec.am_opts.solver.kind = LinearSolver::cg;
        else if (kind == "auto") spec.am_opts.solver.kind = LinearSolver::automatic;
        else throw ContractViolation("solver.kind: expected auto, cholesky or cg");
      }
      read_opt(s, "cg_min_n", spec.am_opts.solver.cg_min_n);
    }
  } catch (const json::exception& e) {
    throw ContractViolation(std::string("spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw NumericalFailure("sha256: digest computation failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

SweepSummary run_sweep(const SweepSpec& spec, const std::string& out_dir, std::ostream* log) {
  spec.validate();
  fs::create_directories(out_dir);
  SweepSummary summary;
  summary.manifest_path = (fs::path(out_dir) / "manifest.json").string();
  const json spec_doc = sweep_spec_to_json(spec);

  json manifest = {{"kind", "amdyn.sweep"},
                   {"version", 1},
                   {"code_version", kCodeVersion},
                   {"spec", spec_doc},
                   {"cells", json::object()}};
  if (fs::exists(summary.manifest_path)) {
    json old;
    try {
      old = json::parse(read_file(summary.manifest_path));
    } catch (const json::exception& e) {
      throw ContractViolation("out-dir: unreadable manifest: " + std::string(e.what()));
    }
    require(old.value("spec", json()) == spec_doc,
            "out-dir: holds a sweep with a different spec; use a fresh directory");
    manifest["cells"] = old.at("cells");
  }
  auto save = [&]() { write_file_atomic(summary.manifest_path, manifest.dump(2) + "\n"); };

  auto is_done = [&](const std::string& id) {
    const json& cells = manifest["cells"];
    if (!cells.contains(id) || cells[id].value("status", "") != "done") return false;
    const fs::path file = fs::path(out_dir) / cells[id].at("file").get<std::string>();
    return fs::exists(file) && sha256_hex(read_file(file.string())) == cells[id].at("sha256");
  };

  auto run_cell = [&](const std::string& id, const std::string& rel, json entry,
                      const std::function<std::string()>& compute) {
    if (is_done(id)) {
      ++summary.skipped;
      if (log) *log << "skip " << id << "\n";
      return;
    }
    if (log) *log << "run  " << id << std::flush;
    const auto start = std::chrono::steady_clock::now();
    entry["file"] = rel;
    try {
      const std::string text = compute();
      write_file_atomic((fs::path(out_dir) / rel).string(), text);
      entry["status"] = "done";
      entry["sha256"] = sha256_hex(text);
      entry["wall_seconds"] = seconds_since(start);
      ++summary.computed;
      if (log) *log << "  done in " << seconds_since(start) << " s\n";
    } catch (const std::exception& e) {
      entry["status"] = "failed";
      entry["error"] = e.what();
      ++summary.failed;
      if (log) *log << "  failed: " << e.what() << "\n";
    }
    manifest["cells"][id] = entry;
    save();
  };

  const std::vector<double> kappas = spec.kappas();
  for (double m0 : spec.m0) {
    for (double kappa : kappas) {
      ModelConfig config;
      config.kappa = kappa;
      config.lambda = spec.lambda;
      config.m0 = m0;
      config.t_max = spec.t_max;
      const std::string tag = "m0_" + fmt_num(m0) + "_kappa_" + fmt_num(kappa);

      if (spec.theory) {
        const std::string id = "theory/" + tag;
        json entry = {{"kind", "theory"}, {"m0", m0}, {"kappa", kappa},
                      {"seed", spec.theory_opts.seed}};
        run_cell(id, "theory/" + tag + "_T_" + std::to_string(spec.t_max) + ".json", entry,
                 [&]() {
                   SolveOptions opts = spec.theory_opts;
                   opts.workers = spec.workers;
                   return theory_to_json(solve(config, opts)).dump(2) + "\n";
                 });
      }

      for (std::size_t n : spec.n) {
        for (AmMode mode : {AmMode::full_batch, AmMode::online}) {
          if (mode == AmMode::full_batch ? !spec.sim : !spec.online) continue;
          const std::string engine = to_string(mode);
          const std::string id = "sim/" + tag + "_N_" + std::to_string(n) + "_" + engine;
          const std::vector<std::uint64_t> seeds = seed_range(spec.first_seed, spec.seeds);
          json entry = {{"kind", "sim"}, {"m0", m0},         {"kappa", kappa},
                        {"n", n},        {"engine", engine}, {"seeds", seeds}};
          run_cell(id, id + ".csv", entry, [&]() {
            ModelConfig c = config;
            c.n = n;
            return records_to_csv(simulate_seeds(c, mode, seeds, spec.workers, spec.am_opts));
          });
        }
      }
    }
  }
  if (!fs::exists(summary.manifest_path)) save();
  return summary;
}

}  // namespace amdyn
