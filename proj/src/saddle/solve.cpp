#include "amdyn/saddle/solve.hpp"

#include "amdyn/core/errors.hpp"
#include "amdyn/core/parallel.hpp"
#include "amdyn/saddle/nonhatted.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

namespace amdyn {

namespace {

double now_seconds() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

}  // namespace

std::string to_string(Phase phase) { return phase == Phase::u ? "u" : "v"; }

void SolveOptions::validate() const {
  require(n_mc >= 1, "n-mc: must be >= 1");
  require(buckets >= 1 && buckets <= n_mc, "buckets: must lie in [1, n-mc]");
  require(std::isfinite(damping) && damping > 0.0 && damping <= 1.0, "damping: must lie in (0, 1]");
  require(std::isfinite(tol) && tol > 0.0, "tol: must be positive");
  require(max_inner_iters >= 1, "max-inner-iters: must be >= 1");
  require(std::isfinite(jitter) && jitter > 0.0, "jitter: must be positive");
  require(max_memory_gb > 0.0, "max-memory-gb: must be positive");
  require(rel_floor > 0.0, "rel-floor: must be positive");
}

void validate_theory_config(const ModelConfig& config) {
  require(std::isfinite(config.kappa) && config.kappa >= 0.0, "kappa: must be >= 0");
  require(std::isfinite(config.lambda) && config.lambda > 0.0, "lambda: must be a positive number");
  require(std::isfinite(config.m0) && config.m0 >= -1.0 && config.m0 <= 1.0,
          "m0: must lie in [-1, 1]");
  require(config.t_max >= 1, "T: must be >= 1");
}

double ensemble_memory_bytes(std::size_t n_mc, int t_max) {
  return 8.0 * static_cast<double>(McEnsemble::doubles_per_sample(t_max)) *
         static_cast<double>(n_mc);
}

SaddleSolver::SaddleSolver(const ModelConfig& config, const SolveOptions& opts, const Loss& loss)
    : config_(config), opts_(opts), loss_(loss) {
  validate_theory_config(config);
  opts.validate();
  const double need = ensemble_memory_bytes(opts.n_mc, config.t_max);
  if (need > opts.max_memory_gb * 1e9) {
    std::ostringstream msg;
    msg << "n-mc: " << opts.n_mc << " paths over T=" << config.t_max << " need "
        << need / 1e9 << " GB, above the " << opts.max_memory_gb
        << " GB budget; lower --n-mc or raise --max-memory-gb";
    throw ContractViolation(msg.str());
  }
  workers_ = opts.workers == 0 ? default_workers() : opts.workers;
  started_ = now_seconds();
  ens_ = std::make_unique<McEnsemble>(opts.n_mc, config.t_max, config.m0, opts.seed, opts.jitter);
  params_.m0 = config.m0;
}

std::vector<double> SaddleSolver::pack(int t, Phase phase) const {
  std::vector<double> theta;
  const bool u = phase == Phase::u;
  theta.push_back(u ? params_.m_u[t - 1] : params_.m_v[t - 1]);
  if (u) theta.push_back(params_.R[t - 1]);
  const TriMatrix& q = u ? params_.q_u : params_.q_v;
  const TriMatrix& chi = u ? params_.chi_u : params_.chi_v;
  for (int s = 1; s <= t; ++s) theta.push_back(q(s, t));
  for (int s = 1; s <= t; ++s) theta.push_back(chi(s, t));
  return theta;
}

void SaddleSolver::unpack(int t, Phase phase, const std::vector<double>& theta) {
  const bool u = phase == Phase::u;
  std::size_t j = 0;
  (u ? params_.m_u : params_.m_v)[t - 1] = theta[j++];
  if (u) params_.R[t - 1] = theta[j++];
  TriMatrix& q = u ? params_.q_u : params_.q_v;
  TriMatrix& chi = u ? params_.chi_u : params_.chi_v;
  for (int s = 1; s <= t; ++s) q.at(s, t) = theta[j++];
  for (int s = 1; s <= t; ++s) chi.at(s, t) = theta[j++];
}

void SaddleSolver::warm_start(int t, Phase phase) {
  const bool u = phase == Phase::u;
  std::vector<double>& m = u ? params_.m_u : params_.m_v;
  TriMatrix& q = u ? params_.q_u : params_.q_v;
  TriMatrix& chi = u ? params_.chi_u : params_.chi_v;
  if (t == 1) {
    m[0] = 0.0;
    if (u) params_.R[0] = 0.0;
    q.at(1, 1) = 1.0;
    chi.at(1, 1) = 1.0 / (config_.lambda + config_.kappa);
    return;
  }
  // Repeat the previous column: the new field starts as a copy of the last one.
  m[t - 1] = m[t - 2];
  if (u) params_.R[t - 1] = params_.R[t - 2];
  for (int s = 1; s < t; ++s) q.at(s, t) = q(s, t - 1);
  q.at(t, t) = q(t - 1, t - 1);
  for (int s = 1; s < t; ++s) chi.at(s, t) = (s < t - 1) ? chi(s, t - 1) : 0.0;
  chi.at(t, t) = chi(t - 1, t - 1);
}

void SaddleSolver::store_hatted(int t, Phase phase, const HattedEstimate& est) {
  const bool u = phase == Phase::u;
  for (HattedParams* h : {&hatted_, &hatted_se_}) {
    const bool se = h == &hatted_se_;
    auto pick = [se](const Estimate& e) { return se ? e.se : e.value; };
    (u ? h->m_hat_u : h->m_hat_v)[t - 1] = pick(est.m_hat);
    if (u) h->R_hat[t - 1] = pick(est.R_hat);
    TriMatrix& qh = u ? h->q_hat_u : h->q_hat_v;
    TriMatrix& ch = u ? h->chi_hat_u : h->chi_hat_v;
    for (int s = 1; s <= t; ++s) {
      qh.at(s, t) = pick(est.q_hat[s - 1]);
      ch.at(s, t) = pick(est.chi_hat[s - 1]);
    }
  }
}

void SaddleSolver::solve_block(int t, Phase phase) {
  const bool u = phase == Phase::u;
  require(t >= 1 && t <= config_.t_max, "solve_block: t out of range");
  require(u ? (params_.t_u() == t - 1 && params_.t_v() == t) : (params_.t_v() == t - 1),
          "solve_block: blocks must be solved in the order v1, u1, v2, u2, ...");
  if (u) {
    params_.grow_u();
    hatted_.grow_u();
    hatted_se_.grow_u();
  } else {
    params_.grow_v();
    hatted_.grow_v();
    hatted_se_.grow_v();
  }
  warm_start(t, phase);

  BlockDiagnostics diag;
  diag.t = t;
  diag.phase = phase;
  auto evaluate = [&]() {
    double jitter = 0.0;
    HattedEstimate est = evaluate_step(*ens_, params_, config_.kappa, t, phase, loss_, workers_,
                                       opts_.buckets, &jitter);
    diag.jitter = std::max(diag.jitter, jitter);
    return est;
  };

  bool converged = false;
  for (int it = 1; it <= opts_.max_inner_iters; ++it) {
    store_hatted(t, phase, evaluate());

    const std::vector<double> old_theta = pack(t, phase);
    if (u) {
      nonhatted_update_u(hatted_, config_.lambda, t, params_, gamma_);
    } else {
      nonhatted_update_v(hatted_, config_.lambda, t, params_, gamma_);
    }
    std::vector<double> theta = pack(t, phase);
    double change = 0.0;
    for (std::size_t j = 0; j < theta.size(); ++j) {
      const double scale = std::max(std::abs(theta[j]), opts_.rel_floor);
      change = std::max(change, std::abs(theta[j] - old_theta[j]) / scale);
    }
    if (!std::isfinite(change)) change = INFINITY;
    diag.history.push_back(change);
    diag.iterations = it;
    diag.residual = change;
    if (change <= opts_.tol) {
      converged = true;
      break;
    }
    if (!std::isfinite(change)) break;
    for (std::size_t j = 0; j < theta.size(); ++j) {
      theta[j] = (1.0 - opts_.damping) * old_theta[j] + opts_.damping * theta[j];
    }
    unpack(t, phase, theta);
  }
  blocks_.push_back(diag);
  if (!converged) {
    std::ostringstream msg;
    msg << "solve: block (t=" << t << ", " << to_string(phase) << ") did not converge after "
        << diag.iterations << " iterations; relative changes:";
    const std::size_t from = diag.history.size() > 10 ? diag.history.size() - 10 : 0;
    for (std::size_t j = from; j < diag.history.size(); ++j) msg << ' ' << diag.history[j];
    throw ConvergenceFailure(msg.str());
  }
  // Leave the ensemble consistent with the accepted parameters.
  evaluate();

  if (u) {
    const double quu = params_.q_u(t, t);
    const double qvv = params_.q_v(t, t);
    m_cos_.push_back(params_.m_u[t - 1] * params_.m_v[t - 1] / std::sqrt(quu * qvv));
    check_invariants(params_, 1e-8, opts_.jitter);
  }
}

void SaddleSolver::run() {
  for (int t = params_.t_u() + 1; t <= config_.t_max; ++t) {
    if (params_.t_v() < t) solve_block(t, Phase::v);
    solve_block(t, Phase::u);
  }
}

SolveResult SaddleSolver::result() const {
  SolveResult out;
  out.config = config_;
  out.opts = opts_;
  out.params = params_;
  out.hatted = hatted_;
  out.hatted_se = hatted_se_;
  out.m_cos = m_cos_;
  out.blocks = blocks_;
  out.wall_seconds = now_seconds() - started_;
  return out;
}

SolveResult solve(const ModelConfig& config, const SolveOptions& opts, const Loss& loss) {
  SaddleSolver solver(config, opts, loss);
  solver.run();
  return solver.result();
}

TrajectoryErrors estimate_trajectory_errors(const ModelConfig& config, const SolveOptions& opts,
                                            int sections, const Loss& loss) {
  require(sections >= 2, "se-sections: need at least 2 sections");
  require(opts.n_mc / static_cast<std::size_t>(sections) >= opts.buckets,
          "se-sections: each section needs at least `buckets` paths");
  const int T = config.t_max;
  std::vector<std::vector<double>> series[8];
  for (int k = 0; k < sections; ++k) {
    SolveOptions sub = opts;
    sub.n_mc = opts.n_mc / static_cast<std::size_t>(sections);
    sub.seed = splitmix64(opts.seed ^ splitmix64(static_cast<std::uint64_t>(k) + 1));
    const SolveResult r = solve(config, sub, loss);
    std::vector<double> quu, qvv, chiuu, chivv;
    for (int t = 1; t <= T; ++t) {
      quu.push_back(r.params.q_u(t, t));
      qvv.push_back(r.params.q_v(t, t));
      chiuu.push_back(r.params.chi_u(t, t));
      chivv.push_back(r.params.chi_v(t, t));
    }
    series[0].push_back(r.params.m_u);
    series[1].push_back(r.params.m_v);
    series[2].push_back(r.params.R);
    series[3].push_back(quu);
    series[4].push_back(qvv);
    series[5].push_back(r.m_cos);
    series[6].push_back(chiuu);
    series[7].push_back(chivv);
  }
  auto spread = [&](const std::vector<std::vector<double>>& runs) {
    std::vector<double> se(static_cast<std::size_t>(T), 0.0);
    for (int t = 0; t < T; ++t) {
      double mean = 0.0;
      for (const auto& run : runs) mean += run[t];
      mean /= sections;
      double ss = 0.0;
      for (const auto& run : runs) ss += (run[t] - mean) * (run[t] - mean);
      se[t] = std::sqrt(ss / (sections - 1) / sections);
    }
    return se;
  };
  TrajectoryErrors out;
  out.sections = sections;
  out.m_u = spread(series[0]);
  out.m_v = spread(series[1]);
  out.R = spread(series[2]);
  out.q_uu = spread(series[3]);
  out.q_vv = spread(series[4]);
  out.m_cos = spread(series[5]);
  out.chi_uu = spread(series[6]);
  out.chi_vv = spread(series[7]);
  return out;
}

}  // namespace amdyn
