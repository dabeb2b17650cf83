#pragma once

#include "amdyn/am_sim/model.hpp"
#include "amdyn/core/rng.hpp"
#include "amdyn/core/tri_matrix.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace amdyn {

enum class LinearSolver {
  automatic,  // cholesky below cg_min_n, conjugate gradient from there on
  cholesky,   // dense factorization of the N x N normal matrix
  cg,         // Jacobi-preconditioned conjugate gradient on the normal equations
};

struct SolverOptions {
  LinearSolver kind = LinearSolver::automatic;
  std::size_t cg_min_n = 1500;  // automatic switches to CG at this N
  double cg_tol = 1e-10;        // relative residual ||r|| / ||rhs||
  int cg_max_iters = 20000;
  bool mixed_precision = true;  // CG corrections from single-precision copies of A and B
};

bool uses_cg(const SolverOptions& opts, std::size_t n);

/// Transposed single-precision copies of the design matrices (N x P) for the refinement
/// path of CG.
struct LowPrecisionCopy {
  Eigen::MatrixXf At;
  Eigen::MatrixXf Bt;
};

inline LowPrecisionCopy make_low_precision(const Instance& inst) {
  return {inst.A.transpose().cast<float>(), inst.B.transpose().cast<float>()};
}

/// Ridge solve (M^T M + lambda I) x = M^T y with M = diag(d) X.
/// `warm` seeds the CG path and is ignored by the Cholesky path. When `Xt_lo` (the float
/// transpose of X) is given, CG
/// runs iterative refinement: residuals in double, corrections from a float solve. The
/// stopping rule on the double residual is the same either way.
Eigen::VectorXd ridge_solve(const Eigen::MatrixXd& X, const Eigen::VectorXd& d,
                            const Eigen::VectorXd& y, double lambda,
                            const SolverOptions& opts = {},
                            const Eigen::VectorXd* warm = nullptr,
                            const Eigen::MatrixXf* Xt_lo = nullptr);

/// v = (B^T D_u^2 B + lambda I)^{-1} B^T D_u y with D_u = diag(A u_prev).
Eigen::VectorXd am_update_v(const Instance& inst, const Eigen::VectorXd& u_prev, double lambda,
                            const SolverOptions& opts = {},
                            const Eigen::VectorXd* warm = nullptr,
                            const LowPrecisionCopy* lo = nullptr);

/// u = (A^T D_v^2 A + lambda I)^{-1} A^T D_v y with D_v = diag(B v_curr).
Eigen::VectorXd am_update_u(const Instance& inst, const Eigen::VectorXd& v_curr, double lambda,
                            const SolverOptions& opts = {},
                            const Eigen::VectorXd* warm = nullptr,
                            const LowPrecisionCopy* lo = nullptr);

/// Full objective 1/2 ||y - (A u) o (B v)||^2 + lambda/2 (||u||^2 + ||v||^2).
double am_objective(const Instance& inst, const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                    double lambda);

/// m_u m_v / sqrt(q_uu q_vv).
double product_cosine(double m_u, double m_v, double q_uu, double q_vv);

enum class AmMode { full_batch, online };

AmMode parse_am_mode(const std::string& text);
std::string to_string(AmMode mode);

struct AmOptions {
  SolverOptions solver;
  bool keep_trajectories = false;  // store every u^t and v^t
  bool full_overlaps = false;      // fill EmpiricalStats::q_u and q_v
};

/// Per-iteration overlaps; index t-1 holds iteration t.
struct EmpiricalStats {
  std::vector<double> m_u, m_v, R, q_uu, q_vv, m_cos;
  std::optional<TriMatrix> q_u, q_v;
};

struct AmResult {
  EmpiricalStats stats;
  /// Objective after each half-step: L(u^0, v^1), L(u^1, v^1), L(u^1, v^2), ...
  /// Evaluated on the half-step's own batch in online mode.
  std::vector<double> objective;
  std::vector<Eigen::VectorXd> u;  // u^1..u^T when keep_trajectories
  std::vector<Eigen::VectorXd> v;  // v^1..v^T when keep_trajectories
};

/// Alternates am_update_v and am_update_u for t = 1..T from u^0. Full-batch runs throw
/// NumericalFailure if the objective ever increases. Online runs draw a fresh batch per
/// half-step from `rng`.
AmResult run_am(const Instance& inst, const ModelConfig& config, AmMode mode,
                const RngStream& rng, const AmOptions& opts = {});

}  // namespace amdyn
