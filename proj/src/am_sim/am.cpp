#include "amdyn/am_sim/am.hpp"

#include "amdyn/core/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace amdyn {

namespace {

Eigen::VectorXd cholesky_ridge(const Eigen::MatrixXd& X, const Eigen::VectorXd& d,
                               const Eigen::VectorXd& y, double lambda) {
  const Eigen::MatrixXd M = d.asDiagonal() * X;
  const auto n = X.cols();
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(n, n);
  G.selfadjointView<Eigen::Lower>().rankUpdate(M.transpose());
  G.diagonal().array() += lambda;
  Eigen::LLT<Eigen::MatrixXd, Eigen::Lower> llt(G);
  if (llt.info() != Eigen::Success) {
    throw NumericalFailure("ridge_solve: normal matrix is not positive definite");
  }
  return llt.solve(M.transpose() * y);
}

Eigen::VectorXd jacobi_diagonal(const Eigen::MatrixXd& X, const Eigen::VectorXd& d2,
                                double lambda) {
  Eigen::VectorXd diag(X.cols());
  for (Eigen::Index i = 0; i < X.cols(); ++i) diag(i) = X.col(i).cwiseAbs2().dot(d2) + lambda;
  return diag;
}

// Preconditioned CG for apply(x) = rhs. Returns the iteration count, or -1 when the
// residual is still above tol * ||rhs|| after max_iters.
template <typename Vec, typename Apply>
int pcg(const Apply& apply, const Vec& precond, const Vec& rhs, Vec& x, double tol,
        int max_iters) {
  using Scalar = typename Vec::Scalar;
  const double stop = tol * static_cast<double>(rhs.norm());
  Vec r = rhs - apply(x);
  Vec z = r.cwiseQuotient(precond);
  Vec p = z;
  Scalar rz = r.dot(z);
  for (int it = 0; it < max_iters; ++it) {
    if (static_cast<double>(r.norm()) <= stop) return it;
    const Vec Ap = apply(p);
    const Scalar alpha = rz / p.dot(Ap);
    x += alpha * p;
    r -= alpha * Ap;
    z = r.cwiseQuotient(precond);
    const Scalar rz_next = r.dot(z);
    p = z + (rz_next / rz) * p;
    rz = rz_next;
  }
  return static_cast<double>(r.norm()) <= stop ? max_iters : -1;
}

// x -> Xt diag(d2) Xt^T x + lambda x, streaming Xt (N x P) once in column panels.
class FusedFloatOperator {
 public:
  FusedFloatOperator(const Eigen::MatrixXf& Xt, const Eigen::VectorXf& d2, float lambda)
      : Xt_(Xt), d2_(d2), lambda_(lambda), panel_(kPanel) {}

  Eigen::VectorXf operator()(const Eigen::VectorXf& x) const {
    Eigen::VectorXf out = lambda_ * x;
    const Eigen::Index p = Xt_.cols();
    for (Eigen::Index j = 0; j < p; j += kPanel) {
      const Eigen::Index m = std::min<Eigen::Index>(kPanel, p - j);
      const auto block = Xt_.middleCols(j, m);
      panel_.head(m).noalias() = block.transpose() * x;
      panel_.head(m).array() *= d2_.segment(j, m).array();
      out.noalias() += block * panel_.head(m);
    }
    return out;
  }

 private:
  static constexpr Eigen::Index kPanel = 64;
  const Eigen::MatrixXf& Xt_;
  const Eigen::VectorXf& d2_;
  float lambda_;
  mutable Eigen::VectorXf panel_;
};

Eigen::VectorXd cg_ridge(const Eigen::MatrixXd& X, const Eigen::VectorXd& d,
                         const Eigen::VectorXd& y, double lambda, const SolverOptions& opts,
                         const Eigen::VectorXd* warm, const Eigen::MatrixXf* Xt_lo) {
  const auto n = X.cols();
  const Eigen::VectorXd d2 = d.cwiseAbs2();
  const Eigen::VectorXd rhs = X.transpose() * d.cwiseProduct(y);
  const double rhs_norm = rhs.norm();
  if (rhs_norm == 0.0) return Eigen::VectorXd::Zero(n);
  Eigen::VectorXd x = (warm != nullptr && warm->size() == n) ? *warm : Eigen::VectorXd::Zero(n);

  auto apply = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    Eigen::VectorXd out = X.transpose() * d2.cwiseProduct(X * v);
    out += lambda * v;
    return out;
  };

  if (Xt_lo != nullptr) {
    // Iterative refinement: residuals in double, corrections from a single-precision solve.
    const Eigen::VectorXf d2_lo = d2.cast<float>();
    Eigen::VectorXf precond_lo = Eigen::VectorXf::Constant(n, static_cast<float>(lambda));
    for (Eigen::Index j = 0; j < Xt_lo->cols(); j += 256) {
      const Eigen::Index m = std::min<Eigen::Index>(256, Xt_lo->cols() - j);
      const Eigen::MatrixXf squared = Xt_lo->middleCols(j, m).cwiseAbs2();
      precond_lo.noalias() += squared * d2_lo.segment(j, m);
    }
    const FusedFloatOperator apply_lo(*Xt_lo, d2_lo, static_cast<float>(lambda));
    for (int outer = 0; outer < 12; ++outer) {
      const Eigen::VectorXd r = rhs - apply(x);
      const double r_norm = r.norm();
      if (r_norm <= opts.cg_tol * rhs_norm) return x;
      const Eigen::VectorXf r_lo = (r / r_norm).cast<float>();
      Eigen::VectorXf delta = Eigen::VectorXf::Zero(n);
      pcg(apply_lo, precond_lo, r_lo, delta, 1e-5, opts.cg_max_iters);
      x += r_norm * delta.cast<double>();
    }
  }

  const Eigen::VectorXd precond = jacobi_diagonal(X, d2, lambda);
  if (pcg(apply, precond, rhs, x, opts.cg_tol, opts.cg_max_iters) >= 0) return x;
  std::ostringstream msg;
  msg << "ridge_solve: conjugate gradient did not reach relative residual " << opts.cg_tol
      << " within " << opts.cg_max_iters << " iterations";
  throw NumericalFailure(msg.str());
}

}  // namespace

bool uses_cg(const SolverOptions& opts, std::size_t n) {
  return opts.kind == LinearSolver::cg ||
         (opts.kind == LinearSolver::automatic && n >= opts.cg_min_n);
}

Eigen::VectorXd ridge_solve(const Eigen::MatrixXd& X, const Eigen::VectorXd& d,
                            const Eigen::VectorXd& y, double lambda, const SolverOptions& opts,
                            const Eigen::VectorXd* warm, const Eigen::MatrixXf* Xt_lo) {
  require(lambda > 0.0, "ridge_solve: lambda must be positive");
  require(d.size() == X.rows() && y.size() == X.rows(), "ridge_solve: shape mismatch");
  if (Xt_lo != nullptr) {
    require(Xt_lo->rows() == X.cols() && Xt_lo->cols() == X.rows(),
            "ridge_solve: low-precision copy has the wrong shape");
  }
  return uses_cg(opts, static_cast<std::size_t>(X.cols()))
             ? cg_ridge(X, d, y, lambda, opts, warm, Xt_lo)
             : cholesky_ridge(X, d, y, lambda);
}

Eigen::VectorXd am_update_v(const Instance& inst, const Eigen::VectorXd& u_prev, double lambda,
                            const SolverOptions& opts, const Eigen::VectorXd* warm,
                            const LowPrecisionCopy* lo) {
  require(u_prev.size() == inst.A.cols(), "am_update_v: u_prev has wrong length");
  return ridge_solve(inst.B, inst.A * u_prev, inst.y, lambda, opts, warm,
                     lo != nullptr ? &lo->Bt : nullptr);
}

Eigen::VectorXd am_update_u(const Instance& inst, const Eigen::VectorXd& v_curr, double lambda,
                            const SolverOptions& opts, const Eigen::VectorXd* warm,
                            const LowPrecisionCopy* lo) {
  require(v_curr.size() == inst.B.cols(), "am_update_u: v_curr has wrong length");
  return ridge_solve(inst.A, inst.B * v_curr, inst.y, lambda, opts, warm,
                     lo != nullptr ? &lo->At : nullptr);
}

double am_objective(const Instance& inst, const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                    double lambda) {
  const Eigen::VectorXd r = inst.y - (inst.A * u).cwiseProduct(inst.B * v);
  return 0.5 * r.squaredNorm() + 0.5 * lambda * (u.squaredNorm() + v.squaredNorm());
}

double product_cosine(double m_u, double m_v, double q_uu, double q_vv) {
  require(q_uu > 0.0 && q_vv > 0.0, "product_cosine: norms must be positive");
  return m_u * m_v / std::sqrt(q_uu * q_vv);
}

AmMode parse_am_mode(const std::string& text) {
  if (text == "full" || text == "full_batch") return AmMode::full_batch;
  if (text == "online") return AmMode::online;
  throw ContractViolation("mode: expected 'full' or 'online', got '" + text + "'");
}

std::string to_string(AmMode mode) { return mode == AmMode::online ? "online" : "full"; }

AmResult run_am(const Instance& inst, const ModelConfig& config, AmMode mode,
                const RngStream& rng, const AmOptions& opts) {
  config.validate();
  require(static_cast<std::size_t>(inst.A.cols()) == config.n &&
              static_cast<std::size_t>(inst.A.rows()) == config.p(),
          "run_am: instance shape does not match config");
  const double n = static_cast<double>(config.n);
  const int T = config.t_max;

  AmResult out;
  auto& st = out.stats;
  if (opts.full_overlaps) {
    st.q_u.emplace(TriKind::symmetric, T);
    st.q_v.emplace(TriKind::symmetric, T);
  }
  std::vector<Eigen::VectorXd> us, vs;
  const bool keep = opts.keep_trajectories || opts.full_overlaps;

  const bool mixed = opts.solver.mixed_precision && uses_cg(opts.solver, config.n);
  LowPrecisionCopy lo;
  if (mixed && mode == AmMode::full_batch) lo = make_low_precision(inst);

  Eigen::VectorXd u = inst.u0;
  Eigen::VectorXd v;
  Instance batch;
  auto next_batch = [&](std::uint64_t half_step) -> const Instance* {
    if (mode == AmMode::full_batch) return &inst;
    batch = gen_batch(config, inst, rng.derive(half_step));
    if (mixed) lo = make_low_precision(batch);
    return &batch;
  };
  const LowPrecisionCopy* lo_ptr = mixed ? &lo : nullptr;
  for (int t = 1; t <= T; ++t) {
    const Instance* data = next_batch(2 * static_cast<std::uint64_t>(t));
    const Eigen::VectorXd* warm_v = v.size() ? &v : nullptr;
    v = am_update_v(*data, u, config.lambda, opts.solver, warm_v, lo_ptr);
    out.objective.push_back(am_objective(*data, u, v, config.lambda));

    data = next_batch(2 * static_cast<std::uint64_t>(t) + 1);
    u = am_update_u(*data, v, config.lambda, opts.solver, &u, lo_ptr);
    out.objective.push_back(am_objective(*data, u, v, config.lambda));

    if (mode == AmMode::full_batch) {
      const std::size_t k = out.objective.size();
      for (std::size_t j = (k > 2 ? k - 2 : 1); j < k; ++j) {
        const double prev = out.objective[j - 1];
        if (out.objective[j] > prev + 1e-10 * std::max(1.0, std::abs(prev))) {
          std::ostringstream msg;
          msg << "run_am: objective increased from " << prev << " to " << out.objective[j]
              << " at half-step " << j + 1;
          throw NumericalFailure(msg.str());
        }
      }
    }

    const double q_uu = u.squaredNorm() / n;
    const double q_vv = v.squaredNorm() / n;
    const double m_u = u.dot(inst.u_star) / n;
    const double m_v = v.dot(inst.v_star) / n;
    st.m_u.push_back(m_u);
    st.m_v.push_back(m_v);
    st.R.push_back(u.dot(inst.u0) / n);
    st.q_uu.push_back(q_uu);
    st.q_vv.push_back(q_vv);
    st.m_cos.push_back(q_uu > 0.0 && q_vv > 0.0 ? product_cosine(m_u, m_v, q_uu, q_vv) : 0.0);

    if (keep) {
      us.push_back(u);
      vs.push_back(v);
    }
    if (opts.full_overlaps) {
      for (int s = 1; s <= t; ++s) {
        st.q_u->at(s, t) = us[s - 1].dot(u) / n;
        st.q_v->at(s, t) = vs[s - 1].dot(v) / n;
      }
    }
  }
  if (opts.keep_trajectories) {
    out.u = std::move(us);
    out.v = std::move(vs);
  }
  return out;
}

}  // namespace amdyn
