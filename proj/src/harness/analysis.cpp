#include "amdyn/harness/analysis.hpp"

#include "amdyn/core/errors.hpp"
#include "amdyn/core/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace amdyn {

DeltaM2 delta_m2(std::span<const double> theory_m, const std::vector<std::vector<double>>& sim_runs,
                 int t_sum) {
  require(t_sum >= 1, "delta_m2: t_sum must be >= 1");
  require(!sim_runs.empty(), "delta_m2: no simulation runs");
  require(theory_m.size() >= static_cast<std::size_t>(t_sum),
          "delta_m2: theory series shorter than t_sum");
  std::vector<double> per_seed;
  per_seed.reserve(sim_runs.size());
  for (const std::vector<double>& run : sim_runs) {
    require(run.size() >= static_cast<std::size_t>(t_sum),
            "delta_m2: simulation series shorter than t_sum");
    double sum = 0.0;
    for (int t = 0; t < t_sum; ++t) {
      const double d = theory_m[t] - run[t];
      sum += d * d;
    }
    per_seed.push_back(sum);
  }
  const double k = static_cast<double>(per_seed.size());
  double mean = 0.0;
  for (double x : per_seed) mean += x;
  mean /= k;
  DeltaM2 out;
  out.value = mean;
  if (per_seed.size() >= 2) {
    double ss = 0.0;
    for (double x : per_seed) ss += (x - mean) * (x - mean);
    out.se = std::sqrt(ss / (k - 1.0) / k);
  }
  return out;
}

NormalizedDelta normalize_delta(std::span<const double> kappas, std::span<const double> deltas,
                                std::pair<double, double> window) {
  require(kappas.size() == deltas.size(), "normalize_delta: grid and curve lengths differ");
  require(kappas.size() >= 2, "normalize_delta: need at least two grid points");
  for (std::size_t i = 1; i < kappas.size(); ++i) {
    require(kappas[i] > kappas[i - 1], "normalize_delta: kappa grid must be increasing");
  }
  const double eps = 1e-9 * std::max(1.0, std::abs(kappas.back()));
  require(window.first < window.second, "normalize_delta: window must have min < max");
  require(window.first >= kappas.front() - eps && window.second <= kappas.back() + eps,
          "normalize_delta: window lies outside the kappa grid");
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < kappas.size(); ++i) {
    if (kappas[i] >= window.first - eps && kappas[i] <= window.second + eps) {
      xs.push_back(kappas[i]);
      ys.push_back(deltas[i]);
    }
  }
  require(xs.size() >= 2, "normalize_delta: fewer than two grid points inside the window");
  NormalizedDelta out;
  out.integral = trapezoid(xs, ys);
  if (!(out.integral > 0.0)) {
    std::ostringstream msg;
    msg << "normalize_delta: integral over the window is " << out.integral
        << ", normalization needs a positive value";
    throw NumericalFailure(msg.str());
  }
  out.normalized.reserve(deltas.size());
  for (double d : deltas) out.normalized.push_back(d / out.integral);
  return out;
}

std::pair<double, double> default_kappa_window(double m0) {
  if (std::abs(m0 - 0.15) < 1e-12) return {5.0, 7.0};
  if (std::abs(m0 - 0.30) < 1e-12) return {4.0, 6.0};
  if (std::abs(m0 - 0.60) < 1e-12) return {3.0, 4.0};
  std::ostringstream msg;
  msg << "kappa-window: no default window for m0=" << m0 << "; pass one explicitly";
  throw ContractViolation(msg.str());
}

std::vector<CellAggregate> aggregate(const std::vector<RunRecord>& records) {
  std::vector<CellAggregate> cells;
  std::vector<std::vector<const RunRecord*>> members;
  for (const RunRecord& r : records) {
    r.validate();
    std::size_t c = 0;
    while (c < cells.size() && !(cells[c].m0 == r.m0 && cells[c].kappa == r.kappa &&
                                 cells[c].n == r.n && cells[c].engine == r.engine)) {
      ++c;
    }
    if (c == cells.size()) {
      cells.push_back({r.m0, r.kappa, r.n, r.engine, 0, {}, {}});
      members.emplace_back();
    }
    require(members[c].empty() || members[c].front()->t_max() == r.t_max(),
            "aggregate: records of one cell cover different T");
    members[c].push_back(&r);
  }
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const auto& runs = members[c];
    const int T = runs.front()->t_max();
    const double k = static_cast<double>(runs.size());
    CellAggregate& cell = cells[c];
    cell.seeds = runs.size();
    std::vector<double> xs(runs.size());
    for (int t = 0; t < T; ++t) {
      for (std::size_t i = 0; i < runs.size(); ++i) xs[i] = runs[i]->stats.m_cos[t];
      std::sort(xs.begin(), xs.end());
      double mean = 0.0;
      for (double x : xs) mean += x;
      mean /= k;
      double sem = std::numeric_limits<double>::quiet_NaN();
      if (runs.size() >= 2) {
        double ss = 0.0;
        for (double x : xs) ss += (x - mean) * (x - mean);
        sem = std::sqrt(ss / (k - 1.0) / k);
      }
      cell.mean.push_back(mean);
      cell.sem.push_back(sem);
    }
  }
  return cells;
}

nlohmann::json compare_report(const SolveResult& theory, const std::vector<RunRecord>& sims,
                              int t_sum) {
  require(!sims.empty(), "compare: the simulation file holds no records");
  const int T = static_cast<int>(theory.m_cos.size());
  require(t_sum >= 1 && t_sum <= T, "t-sum: must lie in [1, T of the theory file]");
  std::vector<std::vector<double>> runs;
  for (const RunRecord& r : sims) {
    require(r.t_max() >= t_sum, "t-sum: a simulation record is shorter than t-sum");
    runs.push_back(r.stats.m_cos);
  }
  // Cell fields are not stored in the CSV; the theory config labels the comparison.
  std::vector<RunRecord> labeled = sims;
  for (RunRecord& r : labeled) {
    r.m0 = theory.config.m0;
    r.kappa = theory.config.kappa;
    r.engine = "sim";
    r.stats.m_u.resize(t_sum);
    r.stats.m_v.resize(t_sum);
    r.stats.R.resize(t_sum);
    r.stats.q_uu.resize(t_sum);
    r.stats.q_vv.resize(t_sum);
    r.stats.m_cos.resize(t_sum);
  }
  const CellAggregate cell = aggregate(labeled).front();
  const DeltaM2 dm = delta_m2(theory.m_cos, runs, t_sum);

  nlohmann::json per_t = nlohmann::json::array();
  double max_dev = 0.0;
  for (int t = 1; t <= t_sum; ++t) {
    const double th = theory.m_cos[t - 1];
    const double mean = cell.mean[t - 1];
    const double sem = cell.sem[t - 1];
    max_dev = std::max(max_dev, std::abs(th - mean));
    per_t.push_back({{"t", t},
                     {"theory", th},
                     {"mean", mean},
                     {"sem", std::isfinite(sem) ? nlohmann::json(sem) : nlohmann::json()},
                     {"deviation", mean - th}});
  }
  return {{"kind", "amdyn.compare"},
          {"version", 1},
          {"config",
           {{"kappa", theory.config.kappa},
            {"lambda", theory.config.lambda},
            {"m0", theory.config.m0},
            {"T", theory.config.t_max}}},
          {"seeds", sims.size()},
          {"t_sum", t_sum},
          {"per_t", per_t},
          {"max_abs_deviation", max_dev},
          {"delta_m2", {{"value", dm.value}, {"se", dm.se}}}};
}

}  // namespace amdyn
