#pragma once

#include "amdyn/am_sim/am.hpp"
#include "amdyn/saddle/solve.hpp"

#include "json.hpp"

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace amdyn {

struct SweepSpec {
  std::vector<double> m0;
  double kappa_start = 4.0;
  double kappa_stop = 5.0;
  double kappa_step = 0.2;
  std::vector<std::size_t> n;
  std::size_t seeds = 2;        // seeds per simulation cell
  std::uint64_t first_seed = 1;
  int t_max = 20;
  double lambda = 0.01;
  bool theory = true;           // one theory solve per (m0, kappa)
  bool sim = true;              // full-batch AM per (m0, kappa, N, seed)
  bool online = false;          // online AM per (m0, kappa, N, seed)
  SolveOptions theory_opts;
  AmOptions am_opts;
  std::size_t workers = 0;      // 0 picks default_workers()

  /// start, start+step, ... up to stop, rounded to 9 decimals.
  std::vector<double> kappas() const;
  /// Throws ContractViolation naming the offending field.
  void validate() const;
};

nlohmann::json sweep_spec_to_json(const SweepSpec& spec);
/// Missing optional fields keep their defaults. Throws ContractViolation on bad input.
SweepSpec sweep_spec_from_json(const nlohmann::json& doc);

struct SweepSummary {
  std::size_t computed = 0;
  std::size_t skipped = 0;  // already complete in the manifest
  std::size_t failed = 0;
  std::string manifest_path;
};

/// Runs every cell of the grid and records it in out_dir/manifest.json after each cell.
/// Cells whose manifest entry is done and whose file still has the recorded SHA-256 are
/// skipped. A failing cell is recorded with its error and the sweep moves on.
SweepSummary run_sweep(const SweepSpec& spec, const std::string& out_dir,
                       std::ostream* log = nullptr);

/// Hex SHA-256 of a byte string.
std::string sha256_hex(const std::string& bytes);

}  // namespace amdyn
