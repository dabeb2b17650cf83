#pragma once

#include "amdyn/core/tri_matrix.hpp"

#include <Eigen/Dense>

#include <vector>

namespace amdyn {

/// Order parameters of the effective process. Index t-1 of the vectors holds time t.
/// The v side is solved one block ahead of the u side, so t_v() >= t_u().
struct OrderParams {
  double m0 = 0.0;
  std::vector<double> m_u, m_v, R;
  TriMatrix q_u{TriKind::symmetric};
  TriMatrix q_v{TriKind::symmetric};
  TriMatrix chi_u{TriKind::causal};
  TriMatrix chi_v{TriKind::causal};

  int t_u() const { return static_cast<int>(m_u.size()); }
  int t_v() const { return static_cast<int>(m_v.size()); }
  void grow_u();
  void grow_v();

  /// Covariance of (h_star, h0, h^1..h^t): [[1, m0, m_u^T], [m0, 1, R^T], [m_u, R, Q_u]].
  Eigen::MatrixXd bordered_u(int t) const;
  /// Covariance of (k_star, k^1..k^t): [[1, m_v^T], [m_v, Q_v]].
  Eigen::MatrixXd bordered_v(int t) const;
};

/// Conjugate parameters. q_hat stores q-hat^{st} for s <= t and mirrors on read.
struct HattedParams {
  std::vector<double> m_hat_u, m_hat_v, R_hat;
  TriMatrix q_hat_u{TriKind::symmetric};
  TriMatrix q_hat_v{TriKind::symmetric};
  TriMatrix chi_hat_u{TriKind::symmetric};
  TriMatrix chi_hat_v{TriKind::symmetric};

  int t_u() const { return static_cast<int>(m_hat_u.size()); }
  int t_v() const { return static_cast<int>(m_hat_v.size()); }
  void grow_u();
  void grow_v();
};

/// Gamma(a-1, b-1) = E[x^a u^b] for the Gaussian noise x of the effective process.
struct EffectiveProcessStats {
  Eigen::MatrixXd gamma_u;
  Eigen::MatrixXd gamma_v;
};

/// Throws NumericalFailure naming the violated property: chi^{tt} > 0,
/// Cauchy-Schwarz within `tol`, and PSD bordered covariances within jitter.
void check_invariants(const OrderParams& params, double tol = 1e-8, double jitter = 1e-10);

}  // namespace amdyn
