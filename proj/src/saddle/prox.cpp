#include "amdyn/saddle/prox.hpp"

#include "amdyn/core/errors.hpp"

#include <cmath>
#include <sstream>
#include <utility>

namespace amdyn {

namespace {

// Root of the increasing function F(x) = x / chi + g(x), bracketed between 0 and -chi F(0).
template <typename Grad>
double solve_stationary(double chi, const Grad& grad, const char* who, double a, double b,
                        double y) {
  auto [g0, h0] = grad(0.0);
  if (g0 == 0.0) return 0.0;
  double lo = 0.0, hi = -chi * g0;
  if (lo > hi) std::swap(lo, hi);
  double x = 0.0;
  double F = g0;
  double dF = 1.0 / chi + h0;
  for (int it = 0; it < 200; ++it) {
    if (std::abs(F) <= 1e-12) return x;
    if (F > 0.0) hi = x; else lo = x;
    double next = x - F / dF;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (hi - lo <= 1e-15 * (1.0 + std::abs(x))) return x;
    x = next;
    auto [g, h] = grad(x);
    F = x / chi + g;
    dF = 1.0 / chi + h;
  }
  std::ostringstream msg;
  msg << who << ": Newton did not converge for a=" << a << " b=" << b << " y=" << y
      << " chi=" << chi << " (residual " << F << ")";
  throw NumericalFailure(msg.str());
}

}  // namespace

ProxResult prox_v(double a, double b, double y, double chi, const Loss& loss) {
  require(chi > 0.0, "prox_v: chi must be positive");
  if (dynamic_cast<const QuadraticLoss*>(&loss) != nullptr) return prox_v_quadratic(a, b, y, chi);
  const double w = solve_stationary(
      chi,
      [&](double x) {
        const auto p = loss.partials(a, b + x, y);
        return std::pair{p.d2, p.d22};
      },
      "prox_v", a, b, y);
  const auto p = loss.partials(a, b + w, y);
  const double den = 1.0 / chi + p.d22;
  return {w, -p.d12 / den, -p.d22 / den, -p.dy2 / den};
}

ProxResult prox_u(double a, double b, double y, double chi, const Loss& loss) {
  require(chi > 0.0, "prox_u: chi must be positive");
  if (dynamic_cast<const QuadraticLoss*>(&loss) != nullptr) return prox_u_quadratic(a, b, y, chi);
  const double z = solve_stationary(
      chi,
      [&](double x) {
        const auto p = loss.partials(a + x, b, y);
        return std::pair{p.d1, p.d11};
      },
      "prox_u", a, b, y);
  const auto p = loss.partials(a + z, b, y);
  const double den = 1.0 / chi + p.d11;
  return {z, -p.d11 / den, -p.d12 / den, -p.dy1 / den};
}

}  // namespace amdyn
