#pragma once

#include "amdyn/harness/records.hpp"
#include "amdyn/saddle/solve.hpp"

#include "json.hpp"

#include <span>
#include <string>
#include <utility>
#include <vector>

namespace amdyn {

struct DeltaM2 {
  double value = 0.0;  // mean over seeds
  double se = 0.0;     // standard error over seeds (0 for a single seed)
};

/// Mean over seeds of sum_{t=1}^{t_sum} (theory_m[t-1] - run[t-1])^2.
DeltaM2 delta_m2(std::span<const double> theory_m, const std::vector<std::vector<double>>& sim_runs,
                 int t_sum);

struct NormalizedDelta {
  std::vector<double> normalized;  // delta / integral on every grid point
  double integral = 0.0;           // trapezoid of delta over the window
};

/// Divides a delta-m^2 curve by its trapezoid integral over the grid points inside
/// `window` (inclusive).
NormalizedDelta normalize_delta(std::span<const double> kappas, std::span<const double> deltas,
                                std::pair<double, double> window);

/// Default normalization windows for m0 in {0.15, 0.30, 0.60}.
std::pair<double, double> default_kappa_window(double m0);

/// Mean and standard error of m_cos^t over the seeds of one cell.
struct CellAggregate {
  double m0 = 0.0;
  double kappa = 0.0;
  std::size_t n = 0;
  std::string engine;
  std::size_t seeds = 0;
  std::vector<double> mean;
  std::vector<double> sem;  // NaN when the cell has a single seed
};

/// Groups records by (m0, kappa, N, engine) in order of first appearance. Every record of
/// a cell must cover the same T. Each mean is summed in sorted order, so it does not
/// depend on seed order.
std::vector<CellAggregate> aggregate(const std::vector<RunRecord>& records);

/// Per-t theory vs seed mean and SEM, and delta-m^2 over the first t_sum steps.
nlohmann::json compare_report(const SolveResult& theory, const std::vector<RunRecord>& sims,
                              int t_sum);

}  // namespace amdyn
