#include "amdyn/saddle/order_params.hpp"

#include "amdyn/core/errors.hpp"
#include "amdyn/core/linalg.hpp"

#include <cmath>
#include <sstream>

namespace amdyn {

void OrderParams::grow_u() {
  m_u.push_back(0.0);
  R.push_back(0.0);
  q_u.grow();
  chi_u.grow();
}

void OrderParams::grow_v() {
  m_v.push_back(0.0);
  q_v.grow();
  chi_v.grow();
}

Eigen::MatrixXd OrderParams::bordered_u(int t) const {
  require(t >= 0 && t <= t_u(), "bordered_u: t out of range");
  Eigen::MatrixXd M(t + 2, t + 2);
  M(0, 0) = 1.0;
  M(1, 1) = 1.0;
  M(0, 1) = M(1, 0) = m0;
  for (int s = 1; s <= t; ++s) {
    M(0, s + 1) = M(s + 1, 0) = m_u[s - 1];
    M(1, s + 1) = M(s + 1, 1) = R[s - 1];
    for (int r = 1; r <= t; ++r) M(r + 1, s + 1) = q_u(r, s);
  }
  return M;
}

Eigen::MatrixXd OrderParams::bordered_v(int t) const {
  require(t >= 0 && t <= t_v(), "bordered_v: t out of range");
  Eigen::MatrixXd M(t + 1, t + 1);
  M(0, 0) = 1.0;
  for (int s = 1; s <= t; ++s) {
    M(0, s) = M(s, 0) = m_v[s - 1];
    for (int r = 1; r <= t; ++r) M(r, s) = q_v(r, s);
  }
  return M;
}

void HattedParams::grow_u() {
  m_hat_u.push_back(0.0);
  R_hat.push_back(0.0);
  q_hat_u.grow();
  chi_hat_u.grow();
}

void HattedParams::grow_v() {
  m_hat_v.push_back(0.0);
  q_hat_v.grow();
  chi_hat_v.grow();
}

namespace {

void fail(const std::string& what, int s, int t, double lhs, double rhs) {
  std::ostringstream msg;
  msg << "invariant violated: " << what << " at (" << s << "," << t << "): " << lhs << " vs "
      << rhs;
  throw NumericalFailure(msg.str());
}

void check_side(const char* side, const std::vector<double>& m, const TriMatrix& q,
                const TriMatrix& chi, double tol) {
  const int T = static_cast<int>(m.size());
  for (int t = 1; t <= T; ++t) {
    if (!(chi(t, t) > 0.0)) fail(std::string("chi_") + side + " diagonal positive", t, t, chi(t, t), 0.0);
    if (m[t - 1] * m[t - 1] > q(t, t) + tol) {
      fail(std::string("Cauchy-Schwarz for m_") + side, t, t, m[t - 1] * m[t - 1], q(t, t));
    }
    for (int s = 1; s < t; ++s) {
      if (q(s, t) * q(s, t) > q(s, s) * q(t, t) + tol) {
        fail(std::string("Cauchy-Schwarz for q_") + side, s, t, q(s, t) * q(s, t), q(s, s) * q(t, t));
      }
    }
  }
}

}  // namespace

void check_invariants(const OrderParams& params, double tol, double jitter) {
  check_side("u", params.m_u, params.q_u, params.chi_u, tol);
  check_side("v", params.m_v, params.q_v, params.chi_v, tol);
  for (int t = 1; t <= params.t_u(); ++t) {
    if (params.R[t - 1] * params.R[t - 1] > params.q_u(t, t) + tol) {
      fail("Cauchy-Schwarz for R", t, t, params.R[t - 1] * params.R[t - 1], params.q_u(t, t));
    }
  }
  chol_psd(params.bordered_u(params.t_u()), jitter);
  chol_psd(params.bordered_v(params.t_v()), jitter);
}

}  // namespace amdyn
