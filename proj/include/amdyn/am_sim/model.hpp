#pragma once

#include "amdyn/core/rng.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>

namespace amdyn {

struct ModelConfig {
  std::size_t n = 1000;  // dimension N
  double kappa = 5.0;    // sample ratio P/N
  double lambda = 0.01;  // ridge strength
  double m0 = 0.0;       // overlap of the initial u with u_star
  int t_max = 20;        // number of AM iterations T

  /// P = round(kappa * N).
  std::size_t p() const;
  /// Throws ContractViolation naming the first offending field.
  void validate() const;
};

/// One random dataset. A and B are P x N with N(0, 1/N) entries.
struct Instance {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  Eigen::VectorXd u_star;
  Eigen::VectorXd v_star;
  Eigen::VectorXd y;
  Eigen::VectorXd u0;
  std::uint64_t seed = 0;
};

Instance gen_instance(const ModelConfig& config, const RngStream& rng);

/// Fresh (A, B, y) for the given targets; u_star, v_star and u0 are copied from `base`.
Instance gen_batch(const ModelConfig& config, const Instance& base, const RngStream& rng);

}  // namespace amdyn
