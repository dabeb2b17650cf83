#pragma once

#include <string>

namespace amdyn {

/// First and second partial derivatives of a loss l(a, b; y).
struct LossPartials {
  double d1 = 0.0;   // dl/da
  double d2 = 0.0;   // dl/db
  double d11 = 0.0;  // d2l/da2
  double d12 = 0.0;  // d2l/da db
  double d22 = 0.0;  // d2l/db2
  double dy1 = 0.0;  // d2l/dy da
  double dy2 = 0.0;  // d2l/dy db
};

/// Per-sample loss l(a, b; y) with a = A_mu.u and b = B_mu.v. Must be convex in a for
/// fixed b and convex in b for fixed a.
class Loss {
 public:
  virtual ~Loss() = default;
  virtual std::string name() const = 0;
  virtual double value(double a, double b, double y) const = 0;
  virtual LossPartials partials(double a, double b, double y) const = 0;
};

/// l = (y - ab)^2 / 2.
class QuadraticLoss final : public Loss {
 public:
  std::string name() const override { return "quadratic"; }
  double value(double a, double b, double y) const override {
    const double r = y - a * b;
    return 0.5 * r * r;
  }
  LossPartials partials(double a, double b, double y) const override {
    const double r = y - a * b;
    return {-b * r, -a * r, b * b, 2.0 * a * b - y, a * a, -b, -a};
  }
};

const QuadraticLoss& quadratic_loss();

}  // namespace amdyn
