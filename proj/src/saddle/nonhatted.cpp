#include "amdyn/saddle/nonhatted.hpp"

#include "amdyn/core/errors.hpp"

#include <sstream>

namespace amdyn {

namespace {

struct Side {
  const std::vector<double>& m_hat;
  const std::vector<double>* R_hat;  // null on the v side
  const TriMatrix& q_hat;
  const TriMatrix& chi_hat;
  std::vector<double>& m;
  std::vector<double>* R;  // null on the v side
  TriMatrix& q;
  TriMatrix& chi;
  Eigen::MatrixXd& gamma;
  double m0;
};

void update(Side side, double lambda, int t, const char* name) {
  auto den = [&](int b) {
    const double d = side.q_hat(b, b) + lambda;
    if (!(d > 0.0)) {
      std::ostringstream msg;
      msg << "nonhatted_update_" << name << ": q_hat^{" << b << b << "} + lambda = " << d
          << " is not positive";
      throw NumericalFailure(msg.str());
    }
    return d;
  };
  const double d_t = den(t);
  const double m_hat = side.m_hat[t - 1];
  const double R_hat = side.R_hat ? (*side.R_hat)[t - 1] : 0.0;

  double m = m_hat + side.m0 * R_hat;
  for (int s = 1; s < t; ++s) m += side.q_hat(s, t) * side.m[s - 1];
  side.m[t - 1] = m / d_t;

  if (side.R) {
    double r = m_hat * side.m0 + R_hat;
    for (int s = 1; s < t; ++s) r += side.q_hat(s, t) * (*side.R)[s - 1];
    (*side.R)[t - 1] = r / d_t;
  }

  for (int s = 1; s <= t; ++s) {
    double c = (s == t) ? 1.0 : 0.0;
    for (int tp = s; tp < t; ++tp) c += side.q_hat(tp, t) * side.chi(s, tp);
    side.chi.at(s, t) = c / d_t;
  }

  // gamma(a, b) = E[x^a u^b]; columns in increasing b.
  Eigen::MatrixXd& G = side.gamma;
  G.setZero(t, t);
  for (int b = 1; b <= t; ++b) {
    const double d_b = den(b);
    for (int a = 1; a <= t; ++a) {
      double g = side.chi_hat(a, b);
      for (int sp = 1; sp < b; ++sp) g += side.q_hat(sp, b) * G(a - 1, sp - 1);
      G(a - 1, b - 1) = g / d_b;
    }
  }

  // q(tp, t) = E[u^tp u^t], expanding u^t through its defining recursion.
  for (int tp = 1; tp <= t; ++tp) {
    double q = G(t - 1, tp - 1) + m_hat * side.m[tp - 1];
    if (side.R) q += R_hat * (*side.R)[tp - 1];
    for (int s = 1; s < t; ++s) q += side.q_hat(s, t) * side.q(tp, s);
    side.q.at(tp, t) = q / d_t;
  }
}

}  // namespace

void nonhatted_update_u(const HattedParams& hatted, double lambda, int t, OrderParams& params,
                        EffectiveProcessStats& gamma) {
  require(t >= 1 && hatted.t_u() >= t, "nonhatted_update_u: hatted parameters missing for t");
  if (params.t_u() == t - 1) params.grow_u();
  require(params.t_u() >= t, "nonhatted_update_u: earlier steps are not solved");
  update({hatted.m_hat_u, &hatted.R_hat, hatted.q_hat_u, hatted.chi_hat_u, params.m_u, &params.R,
          params.q_u, params.chi_u, gamma.gamma_u, params.m0},
         lambda, t, "u");
}

void nonhatted_update_v(const HattedParams& hatted, double lambda, int t, OrderParams& params,
                        EffectiveProcessStats& gamma) {
  require(t >= 1 && hatted.t_v() >= t, "nonhatted_update_v: hatted parameters missing for t");
  if (params.t_v() == t - 1) params.grow_v();
  require(params.t_v() >= t, "nonhatted_update_v: earlier steps are not solved");
  update({hatted.m_hat_v, nullptr, hatted.q_hat_v, hatted.chi_hat_v, params.m_v, nullptr,
          params.q_v, params.chi_v, gamma.gamma_v, 0.0},
         lambda, t, "v");
}

}  // namespace amdyn
