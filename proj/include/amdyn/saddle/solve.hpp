#pragma once

#include "amdyn/am_sim/loss.hpp"
#include "amdyn/am_sim/model.hpp"
#include "amdyn/saddle/ensemble.hpp"
#include "amdyn/saddle/order_params.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace amdyn {

struct SolveOptions {
  std::size_t n_mc = 1'000'000;    // Monte-Carlo sample paths
  double damping = 0.5;            // eta in theta <- (1 - eta) theta + eta theta_prop
  double tol = 1e-6;               // stop when the largest relative change is below this
  int max_inner_iters = 200;
  std::uint64_t seed = 1;
  std::size_t buckets = 32;        // median-of-means buckets
  double jitter = 1e-10;           // first rung of the Cholesky jitter ladder
  std::size_t workers = 0;         // 0 picks default_workers()
  double max_memory_gb = 3.0;      // refuse ensembles larger than this
  double rel_floor = 1e-3;         // denominator floor of the relative change

  /// Throws ContractViolation naming the first offending field.
  void validate() const;
};

struct BlockDiagnostics {
  int t = 0;
  Phase phase = Phase::v;
  int iterations = 0;
  double residual = 0.0;            // relative change at the last iteration
  double jitter = 0.0;              // largest Cholesky jitter used while sampling
  std::vector<double> history;      // relative change per iteration
};

/// Standard errors of the trajectory from independent half-size solves.
struct TrajectoryErrors {
  int sections = 0;
  std::vector<double> m_u, m_v, R, q_uu, q_vv, chi_uu, chi_vv, m_cos;
};

struct SolveResult {
  ModelConfig config;
  SolveOptions opts;
  OrderParams params;
  HattedParams hatted;
  HattedParams hatted_se;  // per-expectation Monte-Carlo standard errors, same layout
  std::vector<double> m_cos;
  std::vector<BlockDiagnostics> blocks;
  std::optional<TrajectoryErrors> trajectory_se;
  double wall_seconds = 0.0;
};

/// Checks the theory-relevant fields of a ModelConfig (N is not used by the theory).
void validate_theory_config(const ModelConfig& config);

/// Bytes needed for an ensemble of n_mc paths over T steps.
double ensemble_memory_bytes(std::size_t n_mc, int t_max);

/// Block-by-block solver. Each (t, phase) block is a damped fixed point over the
/// non-hatted parameters of column t, evaluated with common random numbers.
class SaddleSolver {
 public:
  SaddleSolver(const ModelConfig& config, const SolveOptions& opts,
               const Loss& loss = quadratic_loss());

  /// Solves the v block then the u block of every step up to t_max.
  void run();
  /// Solves one block; blocks must be requested in order v1, u1, v2, ...
  void solve_block(int t, Phase phase);

  const McEnsemble& ensemble() const { return *ens_; }
  const OrderParams& params() const { return params_; }
  const HattedParams& hatted() const { return hatted_; }
  SolveResult result() const;

 private:
  std::vector<double> pack(int t, Phase phase) const;
  void unpack(int t, Phase phase, const std::vector<double>& theta);
  void warm_start(int t, Phase phase);
  void store_hatted(int t, Phase phase, const HattedEstimate& est);

  ModelConfig config_;
  SolveOptions opts_;
  const Loss& loss_;
  std::size_t workers_;
  std::unique_ptr<McEnsemble> ens_;
  OrderParams params_;
  HattedParams hatted_;
  HattedParams hatted_se_;
  EffectiveProcessStats gamma_;
  std::vector<double> m_cos_;
  std::vector<BlockDiagnostics> blocks_;
  double started_ = 0.0;
};

/// Runs SaddleSolver to completion.
SolveResult solve(const ModelConfig& config, const SolveOptions& opts,
                  const Loss& loss = quadratic_loss());

/// Solves `sections` independent problems with n_mc / sections paths and seeds derived
/// from opts.seed; the spread of their trajectories divided by sqrt(sections) estimates
/// the Monte-Carlo error of a full-size solve.
TrajectoryErrors estimate_trajectory_errors(const ModelConfig& config, const SolveOptions& opts,
                                            int sections, const Loss& loss = quadratic_loss());

std::string to_string(Phase phase);

}  // namespace amdyn
