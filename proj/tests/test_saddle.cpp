#include "amdyn/cli/selftest.hpp"
#include "amdyn/core.hpp"
#include "amdyn/saddle.hpp"

#include "doctest.h"

#include <cmath>
#include <functional>

using namespace amdyn;

namespace {

// Golden-section minimizer on [lo, hi].
double argmin_1d(const std::function<double(double)>& f, double lo, double hi) {
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  for (int it = 0; it < 200; ++it) {
    const double c = b - g * (b - a), d = a + g * (b - a);
    if (f(c) < f(d)) b = d; else a = c;
  }
  return 0.5 * (a + b);
}

struct LogCoshLoss final : Loss {
  std::string name() const override { return "logcosh"; }
  double value(double a, double b, double y) const override { return std::log(std::cosh(y - a * b)); }
  LossPartials partials(double a, double b, double y) const override {
    const double r = y - a * b;
    const double th = std::tanh(r);
    const double s = 1.0 - th * th;
    return {-b * th, -a * th, b * b * s, a * b * s - th, a * a * s, -b * s, -a * s};
  }
};

// The quadratic loss without the closed-form fast path.
struct GenericQuadratic final : Loss {
  std::string name() const override { return "generic-quadratic"; }
  double value(double a, double b, double y) const override { return quadratic_loss().value(a, b, y); }
  LossPartials partials(double a, double b, double y) const override {
    return quadratic_loss().partials(a, b, y);
  }
};

ModelConfig theory_config(double kappa, double m0, int T) {
  ModelConfig c;
  c.kappa = kappa;
  c.m0 = m0;
  c.t_max = T;
  return c;
}

SolveOptions small_opts(std::size_t n_mc, std::uint64_t seed = 1) {
  SolveOptions o;
  o.n_mc = n_mc;
  o.seed = seed;
  o.workers = 2;
  return o;
}

}  // namespace

TEST_CASE("prox_v: examples") {
  CHECK(prox_v(1, 0, 2, 1).value == doctest::Approx(1.0));
  CHECK(prox_v(0, 0.7, 1.3, 2.0).value == 0.0);
  const double oracle = argmin_1d([](double w) { return w * w / (2 * 0.5) + quadratic_loss().value(2, 1 + w, 4); }, -10, 10);
  CHECK(oracle == doctest::Approx(2.0 / 3.0).epsilon(1e-7));
  CHECK(prox_v(2, 1, 4, 0.5).value == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("prox_u: examples") {
  CHECK(prox_u(0, 1, 2, 1).value == doctest::Approx(1.0));
  CHECK(prox_u(0.4, 0, 1.3, 2.0).value == 0.0);
  // z minimizes z^2 / (2 chi) + (y - (a + z) b)^2 / 2, which gives chi b (y - ab) / (1 + chi b^2).
  const double oracle = argmin_1d([](double z) { return z * z / (2 * 0.5) + quadratic_loss().value(1 + z, 2, 4); }, -10, 10);
  CHECK(oracle == doctest::Approx(2.0 / 3.0).epsilon(1e-7));
  CHECK(prox_u(1, 2, 4, 0.5).value == doctest::Approx(oracle).epsilon(1e-7));
}

TEST_CASE("prox property: partials match finite differences, generic and closed forms agree") {
  const LogCoshLoss logcosh;
  const GenericQuadratic generic;
  const double h = 1e-6;
  for (const Loss* loss : {static_cast<const Loss*>(&quadratic_loss()), static_cast<const Loss*>(&logcosh), static_cast<const Loss*>(&generic)}) {
    for (double chi : {0.3, 1.7}) {
      const double a = 0.8, b = -0.6, y = 1.1;
      const ProxResult v = prox_v(a, b, y, chi, *loss);
      const ProxResult u = prox_u(a, b, y, chi, *loss);
      CHECK(std::abs(v.value / chi + loss->partials(a, b + v.value, y).d2) <= 1e-10);
      CHECK(std::abs(u.value / chi + loss->partials(a + u.value, b, y).d1) <= 1e-10);
      auto fv = [&](double aa, double bb, double yy) { return prox_v(aa, bb, yy, chi, *loss).value; };
      auto fu = [&](double aa, double bb, double yy) { return prox_u(aa, bb, yy, chi, *loss).value; };
      CHECK(v.d_a == doctest::Approx((fv(a + h, b, y) - fv(a - h, b, y)) / (2 * h)).epsilon(1e-6));
      CHECK(v.d_b == doctest::Approx((fv(a, b + h, y) - fv(a, b - h, y)) / (2 * h)).epsilon(1e-6));
      CHECK(v.d_y == doctest::Approx((fv(a, b, y + h) - fv(a, b, y - h)) / (2 * h)).epsilon(1e-6));
      CHECK(u.d_a == doctest::Approx((fu(a + h, b, y) - fu(a - h, b, y)) / (2 * h)).epsilon(1e-6));
      CHECK(u.d_b == doctest::Approx((fu(a, b + h, y) - fu(a, b - h, y)) / (2 * h)).epsilon(1e-6));
      CHECK(u.d_y == doctest::Approx((fu(a, b, y + h) - fu(a, b, y - h)) / (2 * h)).epsilon(1e-6));
    }
  }
  const ProxResult q = prox_v(0.8, -0.6, 1.1, 0.3);
  const ProxResult g = prox_v(0.8, -0.6, 1.1, 0.3, generic);
  CHECK(g.value == doctest::Approx(q.value).epsilon(1e-12));
  CHECK(g.d_a == doctest::Approx(q.d_a).epsilon(1e-10));
}

TEST_CASE("nonhatted updates: t=1 examples") {
  HattedParams hat;
  hat.grow_v();
  hat.grow_u();
  OrderParams p;
  EffectiveProcessStats gamma;
  nonhatted_update_v(hat, 0.01, 1, p, gamma);
  nonhatted_update_u(hat, 0.01, 1, p, gamma);
  CHECK(p.m_u[0] == 0.0);
  CHECK(p.R[0] == 0.0);
  CHECK(p.chi_u(1, 1) == doctest::Approx(100.0));
  CHECK(p.m_v[0] == 0.0);
  CHECK(p.chi_v(1, 1) == doctest::Approx(100.0));

  hat.m_hat_u[0] = 1.0;
  hat.q_hat_u.at(1, 1) = 1.0;
  hat.m_hat_v[0] = 0.5;
  hat.q_hat_v.at(1, 1) = 1.0;
  nonhatted_update_v(hat, 0.01, 1, p, gamma);
  nonhatted_update_u(hat, 0.01, 1, p, gamma);
  CHECK(p.m_u[0] == doctest::Approx(0.9900990099009901).epsilon(1e-14));
  CHECK(p.m_v[0] == doctest::Approx(0.49504950495049505).epsilon(1e-14));

  hat.q_hat_u.at(1, 1) = -0.01;
  CHECK_THROWS_AS(nonhatted_update_u(hat, 0.01, 1, p, gamma), NumericalFailure);
}

TEST_CASE("nonhatted updates at t=2 match a simulation of the Gaussian-process recursion") {
  // u^t = (m_hat^t u* + R_hat^t u0 + sum_{s<t} q_hat^{st} u^s + x^t) / (q_hat^{tt} + lambda)
  // with x ~ N(0, chi_hat) independent of (u*, u0), and chi^{st} = d u^t / d x^s.
  const double lambda = 0.01, m0 = 0.3;
  HattedParams hat;
  hat.grow_u();
  hat.grow_u();
  hat.grow_v();
  hat.grow_v();
  hat.m_hat_u = {0.4, 0.3};
  hat.R_hat = {0.2, -0.1};
  hat.q_hat_u.at(1, 1) = 1.2;
  hat.q_hat_u.at(1, 2) = 0.3;
  hat.q_hat_u.at(2, 2) = 1.5;
  hat.chi_hat_u.at(1, 1) = 0.8;
  hat.chi_hat_u.at(1, 2) = 0.2;
  hat.chi_hat_u.at(2, 2) = 0.6;
  hat.m_hat_v = {0.5, -0.2};
  hat.q_hat_v.at(1, 1) = 0.9;
  hat.q_hat_v.at(1, 2) = -0.4;
  hat.q_hat_v.at(2, 2) = 1.1;
  hat.chi_hat_v.at(1, 1) = 0.7;
  hat.chi_hat_v.at(1, 2) = -0.3;
  hat.chi_hat_v.at(2, 2) = 0.9;

  OrderParams p;
  p.m0 = m0;
  EffectiveProcessStats gamma;
  for (int t = 1; t <= 2; ++t) {
    nonhatted_update_v(hat, lambda, t, p, gamma);
    nonhatted_update_u(hat, lambda, t, p, gamma);
  }

  for (int side = 0; side < 2; ++side) {
    const bool u = side == 0;
    const auto& m_hat = u ? hat.m_hat_u : hat.m_hat_v;
    const TriMatrix& q_hat = u ? hat.q_hat_u : hat.q_hat_v;
    const TriMatrix& chi_hat = u ? hat.chi_hat_u : hat.chi_hat_v;
    const double r1 = u ? hat.R_hat[0] : 0.0, r2 = u ? hat.R_hat[1] : 0.0;
    const double d1 = q_hat(1, 1) + lambda, d2 = q_hat(2, 2) + lambda;
    const Eigen::MatrixXd Lx = chol_psd(chi_hat.dense()).L;
    const double mm0 = u ? m0 : 0.0;

    const std::size_t n = 1'000'000;
    const RngStream rng(77, side);
    // Accumulate E[u^1 u*], E[u^2 u*], E[u^1 u0], E[u^2 u0], E[u^1 u^1], E[u^1 u^2], E[u^2 u^2].
    double s[7] = {0}, s2[7] = {0};
    for (std::size_t i = 0; i < n; ++i) {
      const double g0 = rng.normal(4 * i), g1 = rng.normal(4 * i + 1);
      const double e1 = rng.normal(4 * i + 2), e2 = rng.normal(4 * i + 3);
      const double us = g0;
      const double u0 = mm0 * g0 + std::sqrt(1.0 - mm0 * mm0) * g1;
      const double x1 = Lx(0, 0) * e1;
      const double x2 = Lx(1, 0) * e1 + Lx(1, 1) * e2;
      const double a1 = (m_hat[0] * us + r1 * u0 + x1) / d1;
      const double a2 = (m_hat[1] * us + r2 * u0 + q_hat(1, 2) * a1 + x2) / d2;
      const double v[7] = {a1 * us, a2 * us, a1 * u0, a2 * u0, a1 * a1, a1 * a2, a2 * a2};
      for (int j = 0; j < 7; ++j) {
        s[j] += v[j];
        s2[j] += v[j] * v[j];
      }
    }
    auto within = [&](int j, double value) {
      const double mean = s[j] / n;
      const double se = std::sqrt((s2[j] / n - mean * mean) / n);
      CHECK(std::abs(mean - value) <= 4.0 * se);
    };
    const auto& m = u ? p.m_u : p.m_v;
    const TriMatrix& q = u ? p.q_u : p.q_v;
    const TriMatrix& chi = u ? p.chi_u : p.chi_v;
    within(0, m[0]);
    within(1, m[1]);
    if (u) {
      within(2, p.R[0]);
      within(3, p.R[1]);
    }
    within(4, q(1, 1));
    within(5, q(1, 2));
    within(6, q(2, 2));
    CHECK(chi(1, 1) == doctest::Approx(1.0 / d1).epsilon(1e-14));
    CHECK(chi(2, 2) == doctest::Approx(1.0 / d2).epsilon(1e-14));
    CHECK(chi(1, 2) == doctest::Approx(q_hat(1, 2) / d1 / d2).epsilon(1e-14));
  }
}

TEST_CASE("McEnsemble: initial fields have the m0 correlation") {
  const std::size_t n = 200'000;
  const McEnsemble ens(n, 2, 0.5, 3);
  double shh = 0.0, sss = 0.0, s00 = 0.0, skk = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    shh += ens.h_star(i) * ens.h0(i);
    sss += ens.h_star(i) * ens.h_star(i);
    s00 += ens.h0(i) * ens.h0(i);
    skk += ens.k_star(i) * ens.h_star(i);
    CHECK_UNARY(ens.y(i) == ens.h_star(i) * ens.k_star(i));
  }
  const double tol = 4.0 / std::sqrt(double(n));
  CHECK(std::abs(shh / n - 0.5) <= tol);
  CHECK(std::abs(sss / n - 1.0) <= 2 * tol);
  CHECK(std::abs(s00 / n - 1.0) <= 2 * tol);
  CHECK(std::abs(skk / n) <= tol);
}

TEST_CASE("sample_fields: drawn covariance matches the order parameters") {
  const std::size_t n = 200'000;
  const double tol = 4.0 / std::sqrt(double(n));
  for (int full = 0; full < 2; ++full) {
    McEnsemble ens(n, 1, 0.3, 9);
    OrderParams p;
    p.m0 = 0.3;
    p.grow_v();
    p.grow_u();
    p.m_u[0] = full ? 0.4 : 0.0;
    p.R[0] = full ? 0.3 : 0.0;
    p.q_u.at(1, 1) = 1.5;
    p.m_v[0] = full ? -0.5 : 0.0;
    p.q_v.at(1, 1) = 0.8;
    sample_fields(ens, p, 1, Phase::v, 2);
    sample_fields(ens, p, 1, Phase::u, 2);
    double c_sh = 0, c_0h = 0, c_hh = 0, c_kk = 0, c_sk = 0;
    for (std::size_t i = 0; i < n; ++i) {
      c_sh += ens.h_star(i) * ens.h(i, 1);
      c_0h += ens.h0(i) * ens.h(i, 1);
      c_hh += ens.h(i, 1) * ens.h(i, 1);
      c_sk += ens.k_star(i) * ens.k(i, 1);
      c_kk += ens.k(i, 1) * ens.k(i, 1);
    }
    CHECK(std::abs(c_sh / n - p.m_u[0]) <= tol * 1.5);
    CHECK(std::abs(c_0h / n - p.R[0]) <= tol * 1.5);
    CHECK(std::abs(c_hh / n - 1.5) <= tol * 1.5 * 1.5);
    CHECK(std::abs(c_sk / n - p.m_v[0]) <= tol);
    CHECK(std::abs(c_kk / n - 0.8) <= tol);
  }
}

TEST_CASE("propagate_step: t=1 v phase applies prox_v to (h0, k^1)") {
  McEnsemble ens(1000, 1, 0.2, 4);
  OrderParams p;
  p.m0 = 0.2;
  p.grow_v();
  p.m_v[0] = 0.3;
  p.q_v.at(1, 1) = 1.0;
  p.chi_v.at(1, 1) = 0.4;
  sample_fields(ens, p, 1, Phase::v);
  propagate_step(ens, p, 1, Phase::v);
  for (std::size_t i = 0; i < ens.size(); i += 97) {
    CHECK(ens.w(i, 1) == doctest::Approx(prox_v(ens.h0(i), ens.k(i, 1), ens.y(i), 0.4).value).epsilon(1e-14));
    CHECK(ens.K(i, 1) == doctest::Approx(ens.k(i, 1) + ens.w(i, 1)).epsilon(1e-14));
  }
}

TEST_CASE("propagate_step: memoryless chain rule when chi off-diagonals vanish") {
  const ModelConfig c = theory_config(5.0, 0.3, 2);
  SaddleSolver solver(c, small_opts(2000));
  solver.run();
  OrderParams p = solver.params();
  p.chi_u.at(1, 2) = 0.0;
  p.chi_v.at(1, 2) = 0.0;
  McEnsemble ens(500, 2, 0.3, 5);
  for (int t = 1; t <= 2; ++t) {
    for (Phase ph : {Phase::v, Phase::u}) {
      sample_fields(ens, p, t, ph);
      propagate_step(ens, p, t, ph);
    }
  }
  for (std::size_t i = 0; i < ens.size(); i += 50) {
    const double y = ens.y(i);
    const ProxResult z1 = prox_u(ens.h(i, 1), ens.K(i, 1), y, p.chi_u(1, 1));
    const ProxResult w2 = prox_v(ens.H(i, 1), ens.k(i, 2), y, p.chi_v(2, 2));
    const ProxResult z2 = prox_u(ens.h(i, 2), ens.K(i, 2), y, p.chi_u(2, 2));
    const double dH1_dh1 = 1.0 + z1.d_a;
    const double dw2_dh1 = w2.d_a * dH1_dh1;
    CHECK(ens.B(i, 1, 2) == doctest::Approx(dw2_dh1).epsilon(1e-12));
    CHECK(ens.A(i, 1, 2) == doctest::Approx(z2.d_b * dw2_dh1).epsilon(1e-12));
    CHECK(ens.C(i, 2, 2) == doctest::Approx(z2.d_b * (1.0 + w2.d_b)).epsilon(1e-12));
  }
}

TEST_CASE("McEnsemble property: every sample satisfies the scalar stationarity conditions") {
  const ModelConfig c = theory_config(4.5, 0.3, 3);
  SaddleSolver solver(c, small_opts(5000));
  solver.run();
  const McEnsemble& ens = solver.ensemble();
  const OrderParams& p = solver.params();
  const QuadraticLoss& l = quadratic_loss();
  for (std::size_t i = 0; i < ens.size(); ++i) {
    for (int t = 1; t <= 3; ++t) {
      const double w = ens.w(i, t), z = ens.z(i, t);
      const double gv = w / p.chi_v(t, t) + l.partials(ens.H(i, t - 1), ens.K(i, t), ens.y(i)).d2;
      const double gu = z / p.chi_u(t, t) + l.partials(ens.H(i, t), ens.K(i, t), ens.y(i)).d1;
      CHECK_UNARY(std::abs(gv) <= 1e-10 * std::max(1.0, std::abs(w / p.chi_v(t, t))));
      CHECK_UNARY(std::abs(gu) <= 1e-10 * std::max(1.0, std::abs(z / p.chi_u(t, t))));
    }
  }
}

TEST_CASE("bookkeeping derivatives match central finite differences at T=4") {
  const ModelConfig c = theory_config(5.0, 0.3, 4);
  SaddleSolver solver(c, small_opts(20'000));
  solver.run();
  const FdReport rep = check_bookkeeping_fd(solver, 100, 1e-5);
  INFO(rep.worst);
  CHECK(rep.entries == 100u * 2u * (5 + 7 + 9 + 11));
  CHECK(rep.max_rel_error <= 1e-4);
}

TEST_CASE("hatted updates vanish at kappa = 0") {
  McEnsemble ens(4000, 1, 0.4, 2);
  OrderParams p;
  p.m0 = 0.4;
  p.grow_v();
  p.m_v[0] = 0.2;
  p.q_v.at(1, 1) = 1.0;
  p.chi_v.at(1, 1) = 0.5;
  p.grow_u();
  p.m_u[0] = 0.3;
  p.R[0] = 0.2;
  p.q_u.at(1, 1) = 1.0;
  p.chi_u.at(1, 1) = 0.5;
  const HattedEstimate v = evaluate_step(ens, p, 0.0, 1, Phase::v);
  const HattedEstimate u = evaluate_step(ens, p, 0.0, 1, Phase::u);
  for (const HattedEstimate* e : {&v, &u}) {
    CHECK(e->m_hat.value == 0.0);
    CHECK(e->R_hat.value == 0.0);
    CHECK(e->q_hat[0].value == 0.0);
    CHECK(e->chi_hat[0].value == 0.0);
  }
}

TEST_CASE("evaluate_step equals the separate operations") {
  OrderParams p;
  p.m0 = 0.4;
  p.grow_v();
  p.m_v[0] = 0.2;
  p.q_v.at(1, 1) = 1.0;
  p.chi_v.at(1, 1) = 0.5;
  McEnsemble a(3000, 1, 0.4, 2), b(3000, 1, 0.4, 2);
  const HattedEstimate fused = evaluate_step(a, p, 3.0, 1, Phase::v, quadratic_loss(), 3, 16);
  sample_fields(b, p, 1, Phase::v, 2);
  propagate_step(b, p, 1, Phase::v, quadratic_loss(), 2);
  const HattedEstimate split = hatted_update_v(b, p, 3.0, 1, quadratic_loss(), 1, 16);
  CHECK(fused.m_hat.value == split.m_hat.value);
  CHECK(fused.q_hat[0].value == split.q_hat[0].value);
  CHECK(fused.chi_hat[0].value == split.chi_hat[0].value);
  CHECK(fused.m_hat.se == split.m_hat.se);
}

TEST_CASE("gauss_hermite integrates normal moments exactly") {
  const GaussRule r = gauss_hermite(12);
  double m0 = 0, m2 = 0, m4 = 0, m6 = 0, m3 = 0;
  for (std::size_t i = 0; i < r.x.size(); ++i) {
    const double x = r.x[i], w = r.w[i];
    m0 += w;
    m2 += w * x * x;
    m3 += w * x * x * x;
    m4 += w * std::pow(x, 4);
    m6 += w * std::pow(x, 6);
  }
  CHECK(m0 == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(std::abs(m3) <= 1e-13);
  CHECK(m2 == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(m4 == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(m6 == doctest::Approx(15.0).epsilon(1e-12));
}

TEST_CASE("first-step quadrature oracle is converged in the node count") {
  const ModelConfig c = theory_config(3.0, 0.6, 1);
  const auto a = as_array(quadrature_first_step(c, 32));
  const auto b = as_array(quadrature_first_step(c, 48));
  for (int j = 0; j < 7; ++j) CHECK(std::abs(a[j] - b[j]) <= 1e-4);
}

TEST_CASE("first-step order parameters agree with the quadrature oracle") {
  const ModelConfig c = theory_config(3.0, 0.6, 1);
  const SolveOptions o = small_opts(100'000, 3);
  const auto oracle = as_array(quadrature_first_step(c));
  const auto mc = as_array(first_step_of(solve(c, o)));
  const auto se = as_array(first_step_of(estimate_trajectory_errors(c, o, 5)));
  for (int j = 0; j < 7; ++j) {
    INFO("parameter ", j);
    CHECK(std::abs(mc[j] - oracle[j]) <= 3.0 * se[j]);
  }
}

TEST_CASE("solve: uninformative start keeps the overlaps at zero within 3 SE") {
  const ModelConfig c = theory_config(5.0, 0.0, 3);
  const SolveOptions o = small_opts(100'000);
  const SolveResult r = solve(c, o);
  const TrajectoryErrors se = estimate_trajectory_errors(c, o, 4);
  for (int t = 0; t < 3; ++t) {
    CHECK(std::abs(r.params.m_u[t]) <= 3.0 * se.m_u[t]);
    CHECK(std::abs(r.params.m_v[t]) <= 3.0 * se.m_v[t]);
    CHECK(std::abs(r.m_cos[t]) <= 3.0 * se.m_cos[t]);
    CHECK(std::abs(r.hatted.m_hat_u[t]) <= 3.0 * r.hatted_se.m_hat_u[t]);
    CHECK(std::abs(r.hatted.m_hat_v[t]) <= 3.0 * r.hatted_se.m_hat_v[t]);
  }
}

TEST_CASE("solve property: causality, worker independence and invariants") {
  const ModelConfig c2 = theory_config(4.6, 0.3, 2);
  const ModelConfig c4 = theory_config(4.6, 0.3, 4);
  SolveOptions one = small_opts(20'000, 5);
  one.workers = 1;
  SolveOptions many = one;
  many.workers = 3;
  const SolveResult a = solve(c2, one);
  const SolveResult b = solve(c4, many);
  for (int t = 1; t <= 2; ++t) {
    CHECK(a.params.m_u[t - 1] == b.params.m_u[t - 1]);
    CHECK(a.params.m_v[t - 1] == b.params.m_v[t - 1]);
    CHECK(a.params.R[t - 1] == b.params.R[t - 1]);
    for (int s = 1; s <= t; ++s) {
      CHECK(a.params.q_u(s, t) == b.params.q_u(s, t));
      CHECK(a.params.chi_v(s, t) == b.params.chi_v(s, t));
      CHECK(a.hatted.q_hat_u(s, t) == b.hatted.q_hat_u(s, t));
    }
  }
  const SolveResult b2 = solve(c4, one);
  CHECK(b2.params.q_u.row_major() == b.params.q_u.row_major());
  CHECK(b2.m_cos == b.m_cos);

  const OrderParams& p = b.params;
  CHECK_NOTHROW(check_invariants(p));
  for (int t = 1; t <= 4; ++t) {
    CHECK(p.m_u[t - 1] * p.m_u[t - 1] <= p.q_u(t, t) + 1e-8);
    CHECK(p.m_v[t - 1] * p.m_v[t - 1] <= p.q_v(t, t) + 1e-8);
    CHECK(p.chi_u(t, t) > 0.0);
    for (int s = 1; s < t; ++s) {
      CHECK(p.q_u(s, t) * p.q_u(s, t) <= p.q_u(s, s) * p.q_u(t, t) + 1e-8);
      CHECK_THROWS_AS(p.chi_u(t, s), ContractViolation);
    }
  }
  CHECK(chol_psd(p.bordered_u(4)).jitter <= 1e-4);
  CHECK(chol_psd(p.bordered_v(4)).jitter <= 1e-4);
}

TEST_CASE("check_invariants rejects a state outside Cauchy-Schwarz") {
  OrderParams p;
  p.grow_v();
  p.grow_u();
  p.q_u.at(1, 1) = 1.0;
  p.q_v.at(1, 1) = 1.0;
  p.chi_u.at(1, 1) = 1.0;
  p.chi_v.at(1, 1) = 1.0;
  p.m_u[0] = 1.5;
  CHECK_THROWS_AS(check_invariants(p), NumericalFailure);
}

TEST_CASE("solve: generic loss path reproduces the closed forms") {
  const ModelConfig c = theory_config(4.0, 0.3, 2);
  const SolveOptions o = small_opts(3000);
  const GenericQuadratic generic;
  const SolveResult a = solve(c, o);
  const SolveResult b = solve(c, o, generic);
  for (int t = 0; t < 2; ++t) CHECK(b.m_cos[t] == doctest::Approx(a.m_cos[t]).epsilon(1e-9));
  const LogCoshLoss logcosh;
  const SolveResult d = solve(c, o, logcosh);
  CHECK(std::isfinite(d.m_cos[1]));
}

TEST_CASE("solve: option validation, memory guard and non-convergence") {
  const ModelConfig c = theory_config(5.0, 0.3, 2);
  SolveOptions o = small_opts(1000);
  o.damping = 0.0;
  CHECK_THROWS_WITH_AS(solve(c, o), doctest::Contains("damping"), ContractViolation);
  o = small_opts(1'000'000'000);
  CHECK_THROWS_WITH_AS(SaddleSolver(theory_config(5.0, 0.3, 20), o), doctest::Contains("n-mc"), ContractViolation);
  ModelConfig bad = c;
  bad.lambda = 0.0;
  CHECK_THROWS_WITH_AS(solve(bad, small_opts(1000)), doctest::Contains("lambda"), ContractViolation);
  o = small_opts(1000);
  o.max_inner_iters = 1;
  CHECK_THROWS_WITH_AS(solve(c, o), doctest::Contains("did not converge"), ConvergenceFailure);
}

TEST_CASE("theory JSON round trip") {
  const ModelConfig c = theory_config(4.2, 0.3, 3);
  SolveResult r = solve(c, small_opts(4000));
  r.trajectory_se = estimate_trajectory_errors(c, small_opts(4000), 2);
  const nlohmann::json doc = theory_to_json(r);
  const SolveResult back = theory_from_json(doc);
  CHECK(theory_to_json(back) == doc);
  CHECK(back.params.q_u == r.params.q_u);
  CHECK(back.m_cos == r.m_cos);
  nlohmann::json broken = doc;
  broken.erase("per_t");
  CHECK_THROWS_AS(theory_from_json(broken), ContractViolation);
}
