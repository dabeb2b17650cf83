#pragma once

#include "amdyn/am_sim/loss.hpp"

namespace amdyn {

/// Minimizer of a scalar proximal problem and its derivatives with respect to the inputs.
struct ProxResult {
  double value = 0.0;  // the minimizer (w or z)
  double d_a = 0.0;
  double d_b = 0.0;
  double d_y = 0.0;
};

/// Closed forms for the quadratic loss.
inline ProxResult prox_v_quadratic(double a, double b, double y, double chi) {
  const double den = 1.0 + chi * a * a;
  const double r = y - a * b;
  return {chi * a * r / den,
          chi * ((y - 2.0 * a * b) * den - 2.0 * chi * a * a * r) / (den * den),
          -chi * a * a / den,
          chi * a / den};
}

inline ProxResult prox_u_quadratic(double a, double b, double y, double chi) {
  const double den = 1.0 + chi * b * b;
  const double r = y - a * b;
  return {chi * b * r / den,
          -chi * b * b / den,
          chi * ((y - 2.0 * a * b) * den - 2.0 * chi * b * b * r) / (den * den),
          chi * b / den};
}

/// w = argmin_w  w^2 / (2 chi) + l(a, b + w; y).
ProxResult prox_v(double a, double b, double y, double chi, const Loss& loss = quadratic_loss());

/// z = argmin_z  z^2 / (2 chi) + l(a + z, b; y).
ProxResult prox_u(double a, double b, double y, double chi, const Loss& loss = quadratic_loss());

}  // namespace amdyn
