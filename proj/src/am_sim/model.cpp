#include "amdyn/am_sim/model.hpp"

#include "amdyn/am_sim/loss.hpp"
#include "amdyn/core/errors.hpp"

#include <cmath>

namespace amdyn {

const QuadraticLoss& quadratic_loss() {
  static const QuadraticLoss loss;
  return loss;
}

std::size_t ModelConfig::p() const {
  return static_cast<std::size_t>(std::llround(kappa * static_cast<double>(n)));
}

void ModelConfig::validate() const {
  require(n >= 1, "n: must be >= 1");
  require(std::isfinite(kappa) && kappa > 0.0, "kappa: must be a positive number");
  require(p() >= 1, "kappa: round(kappa * n) must be >= 1");
  require(std::isfinite(lambda) && lambda > 0.0, "lambda: must be a positive number");
  require(std::isfinite(m0) && m0 >= -1.0 && m0 <= 1.0, "m0: must lie in [-1, 1]");
  require(t_max >= 1, "T: must be >= 1");
}

namespace {

Eigen::MatrixXd gaussian_matrix(std::size_t rows, std::size_t cols, double scale,
                                const RngStream& rng) {
  Eigen::MatrixXd M(rows, cols);
  rng.fill_normal(M.data(), static_cast<std::size_t>(M.size()));
  M *= scale;
  return M;
}

Eigen::VectorXd gaussian_vector(std::size_t n, const RngStream& rng) {
  Eigen::VectorXd v(n);
  rng.fill_normal(v.data(), n);
  return v;
}

void draw_measurements(const ModelConfig& config, const RngStream& rng, Instance& inst) {
  const std::size_t n = config.n;
  const std::size_t p = config.p();
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  inst.A = gaussian_matrix(p, n, scale, rng.derive(1));
  inst.B = gaussian_matrix(p, n, scale, rng.derive(2));
  inst.y = (inst.A * inst.u_star).cwiseProduct(inst.B * inst.v_star);
}

}  // namespace

Instance gen_instance(const ModelConfig& config, const RngStream& rng) {
  config.validate();
  Instance inst;
  inst.seed = rng.seed();
  inst.u_star = gaussian_vector(config.n, rng.derive(3));
  inst.v_star = gaussian_vector(config.n, rng.derive(4));
  const Eigen::VectorXd noise = gaussian_vector(config.n, rng.derive(5));
  inst.u0 = config.m0 * inst.u_star + std::sqrt(1.0 - config.m0 * config.m0) * noise;
  draw_measurements(config, rng, inst);
  return inst;
}

Instance gen_batch(const ModelConfig& config, const Instance& base, const RngStream& rng) {
  config.validate();
  require(static_cast<std::size_t>(base.u_star.size()) == config.n,
          "gen_batch: base instance dimension differs from config");
  Instance inst;
  inst.seed = base.seed;
  inst.u_star = base.u_star;
  inst.v_star = base.v_star;
  inst.u0 = base.u0;
  draw_measurements(config, rng, inst);
  return inst;
}

}  // namespace amdyn
