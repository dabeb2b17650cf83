#include "amdyn/am_sim.hpp"
#include "amdyn/core/errors.hpp"

#include "doctest.h"

#include <cmath>

using namespace amdyn;

namespace {

Instance scalar_instance() {
  Instance inst;
  inst.A = Eigen::MatrixXd::Ones(1, 1);
  inst.B = Eigen::MatrixXd::Ones(1, 1);
  inst.u_star = Eigen::VectorXd::Ones(1);
  inst.v_star = Eigen::VectorXd::Ones(1);
  inst.y = Eigen::VectorXd::Ones(1);
  inst.u0 = Eigen::VectorXd::Ones(1);
  return inst;
}

ModelConfig small_config(std::size_t n, double kappa, double m0, int T) {
  ModelConfig c;
  c.n = n;
  c.kappa = kappa;
  c.m0 = m0;
  c.t_max = T;
  return c;
}

// Gradient of 1/2 ||y - (A u) o (B v)||^2 + lambda/2 ||v||^2 in v.
Eigen::VectorXd grad_v(const Instance& inst, const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                       double lambda) {
  const Eigen::VectorXd a = inst.A * u;
  const Eigen::VectorXd b = inst.B * v;
  const Eigen::VectorXd r = inst.y - a.cwiseProduct(b);
  return -inst.B.transpose() * a.cwiseProduct(r) + lambda * v;
}

Eigen::VectorXd grad_u(const Instance& inst, const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                       double lambda) {
  const Eigen::VectorXd a = inst.A * u;
  const Eigen::VectorXd b = inst.B * v;
  const Eigen::VectorXd r = inst.y - a.cwiseProduct(b);
  return -inst.A.transpose() * b.cwiseProduct(r) + lambda * u;
}

}  // namespace

TEST_CASE("gen_instance: shapes and P = round(kappa N)") {
  const ModelConfig c = small_config(2, 1.5, 0.0, 1);
  const Instance inst = gen_instance(c, RngStream(1, 0));
  CHECK(c.p() == 3);
  CHECK(inst.A.rows() == 3);
  CHECK(inst.A.cols() == 2);
  CHECK(inst.B.rows() == 3);
  CHECK(inst.B.cols() == 2);
  CHECK(inst.y.size() == 3);
  CHECK(inst.u_star.size() == 2);
}

TEST_CASE("gen_instance: m0 = 1 starts at the target") {
  const Instance inst = gen_instance(small_config(50, 2.0, 1.0, 1), RngStream(2, 0));
  CHECK(inst.u0 == inst.u_star);
}

TEST_CASE("gen_instance: initial overlap matches m0 at N=4000") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const Instance inst = gen_instance(small_config(4000, 0.01, 0.3, 1), RngStream(seed, 0));
    const double overlap = inst.u0.dot(inst.u_star) / 4000.0;
    CHECK(overlap == doctest::Approx(0.3).epsilon(0.05 / 0.3));
  }
}

TEST_CASE("ModelConfig::validate names the offending field") {
  ModelConfig c;
  c.lambda = -1.0;
  CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("lambda"), ContractViolation);
  c = ModelConfig{};
  c.m0 = 1.5;
  CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("m0"), ContractViolation);
  c = ModelConfig{};
  c.n = 0;
  CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("n"), ContractViolation);
}

TEST_CASE("am_update_v and am_update_u: 1x1 system") {
  const Instance inst = scalar_instance();
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(1);
  // (1 + 0.01)^{-1}
  CHECK(am_update_v(inst, one, 0.01)(0) == doctest::Approx(0.9900990099009901).epsilon(1e-14));
  CHECK(am_update_u(inst, one, 0.01)(0) == doctest::Approx(0.9900990099009901).epsilon(1e-14));
  CHECK(am_update_v(inst, Eigen::VectorXd::Zero(1), 0.01)(0) == 0.0);
  CHECK(am_update_u(inst, Eigen::VectorXd::Zero(1), 0.01)(0) == 0.0);
}

TEST_CASE("am updates property: each half-step zeroes the gradient of its subproblem") {
  for (std::size_t n : {8u, 17u, 64u}) {
    const ModelConfig c = small_config(n, 1.5, 0.2, 1);
    const Instance inst = gen_instance(c, RngStream(n, 0));
    const Eigen::VectorXd v = am_update_v(inst, inst.u0, c.lambda);
    CHECK(grad_v(inst, inst.u0, v, c.lambda).norm() <= 1e-8 * std::sqrt(double(n)));
    const Eigen::VectorXd u = am_update_u(inst, v, c.lambda);
    CHECK(grad_u(inst, u, v, c.lambda).norm() <= 1e-8 * std::sqrt(double(n)));
  }
}

TEST_CASE("ridge_solve: conjugate gradient matches Cholesky") {
  const ModelConfig c = small_config(120, 3.0, 0.3, 1);
  const Instance inst = gen_instance(c, RngStream(5, 0));
  SolverOptions chol, cg, cg_mixed;
  chol.kind = LinearSolver::cholesky;
  cg.kind = LinearSolver::cg;
  cg.mixed_precision = false;
  cg_mixed.kind = LinearSolver::cg;
  const LowPrecisionCopy lo = make_low_precision(inst);
  const Eigen::VectorXd a = am_update_v(inst, inst.u0, c.lambda, chol);
  const Eigen::VectorXd b = am_update_v(inst, inst.u0, c.lambda, cg);
  const Eigen::VectorXd d = am_update_v(inst, inst.u0, c.lambda, cg_mixed, nullptr, &lo);
  CHECK((a - b).norm() <= 1e-8 * a.norm());
  CHECK((a - d).norm() <= 1e-8 * a.norm());
}

TEST_CASE("product_cosine: examples") {
  CHECK(product_cosine(1, 1, 1, 1) == 1.0);
  CHECK(product_cosine(0, 0.7, 2.0, 3.0) == 0.0);
  // 0.2 / sqrt(0.4)
  CHECK(product_cosine(0.5, 0.4, 0.8, 0.5) == doctest::Approx(0.31622776601683794).epsilon(1e-14));
}

TEST_CASE("run_am: near-perfect start retrieves at the first step") {
  const ModelConfig c = small_config(1000, 3.0, 1.0, 1);
  const AmResult r = run_am(gen_instance(c, RngStream(1, 0)), c, AmMode::full_batch, RngStream(1, 1));
  CHECK(r.stats.m_cos[0] >= 0.95);
}

TEST_CASE("run_am: uninformative start stays near zero overlap") {
  const ModelConfig c = small_config(1000, 5.0, 0.0, 5);
  const AmResult r = run_am(gen_instance(c, RngStream(3, 0)), c, AmMode::full_batch, RngStream(3, 1));
  for (double m : r.stats.m_cos) CHECK(std::abs(m) <= 5.0 / std::sqrt(1000.0));
}

TEST_CASE("run_am property: objective is non-increasing and runs are bit-reproducible") {
  const ModelConfig c = small_config(60, 4.0, 0.3, 8);
  const Instance inst = gen_instance(c, RngStream(4, 0));
  AmOptions opts;
  opts.keep_trajectories = true;
  opts.full_overlaps = true;
  const AmResult a = run_am(inst, c, AmMode::full_batch, RngStream(4, 1), opts);
  const AmResult b = run_am(gen_instance(c, RngStream(4, 0)), c, AmMode::full_batch,
                            RngStream(4, 1), opts);
  REQUIRE(a.objective.size() == 2 * 8);
  for (std::size_t j = 1; j < a.objective.size(); ++j) {
    CHECK(a.objective[j] <= a.objective[j - 1] * (1.0 + 1e-12));
  }
  CHECK(a.objective == b.objective);
  CHECK(a.stats.m_cos == b.stats.m_cos);
  for (int t = 0; t < 8; ++t) CHECK(a.u[t] == b.u[t]);
  REQUIRE(a.stats.q_u.has_value());
  CHECK((*a.stats.q_u)(8, 8) == doctest::Approx(a.stats.q_uu[7]));
  for (int t = 0; t < 8; ++t) {
    CHECK(a.stats.m_cos[t] == doctest::Approx(product_cosine(a.stats.m_u[t], a.stats.m_v[t],
                                                             a.stats.q_uu[t], a.stats.q_vv[t])));
  }
}

TEST_CASE("run_am: online mode draws fresh batches and is reproducible") {
  const ModelConfig c = small_config(60, 4.0, 0.3, 4);
  const Instance inst = gen_instance(c, RngStream(6, 0));
  const AmResult a = run_am(inst, c, AmMode::online, RngStream(6, 1));
  const AmResult b = run_am(inst, c, AmMode::online, RngStream(6, 1));
  const AmResult full = run_am(inst, c, AmMode::full_batch, RngStream(6, 1));
  CHECK(a.stats.m_cos == b.stats.m_cos);
  CHECK(a.stats.m_cos != full.stats.m_cos);
  CHECK(parse_am_mode("online") == AmMode::online);
  CHECK(parse_am_mode("full") == AmMode::full_batch);
  CHECK_THROWS_AS(parse_am_mode("batch"), ContractViolation);
}

TEST_CASE("quadratic loss partials match finite differences") {
  const QuadraticLoss& l = quadratic_loss();
  const double a = 0.7, b = -1.3, y = 0.4, h = 1e-5;
  const LossPartials p = l.partials(a, b, y);
  auto d1 = [&](double aa, double bb, double yy) { return l.partials(aa, bb, yy).d1; };
  auto d2 = [&](double aa, double bb, double yy) { return l.partials(aa, bb, yy).d2; };
  CHECK(p.d1 == doctest::Approx((l.value(a + h, b, y) - l.value(a - h, b, y)) / (2 * h)));
  CHECK(p.d2 == doctest::Approx((l.value(a, b + h, y) - l.value(a, b - h, y)) / (2 * h)));
  CHECK(p.d11 == doctest::Approx((d1(a + h, b, y) - d1(a - h, b, y)) / (2 * h)));
  CHECK(p.d12 == doctest::Approx((d1(a, b + h, y) - d1(a, b - h, y)) / (2 * h)));
  CHECK(p.d22 == doctest::Approx((d2(a, b + h, y) - d2(a, b - h, y)) / (2 * h)));
  CHECK(p.dy1 == doctest::Approx((d1(a, b, y + h) - d1(a, b, y - h)) / (2 * h)));
  CHECK(p.dy2 == doctest::Approx((d2(a, b, y + h) - d2(a, b, y - h)) / (2 * h)));
}
