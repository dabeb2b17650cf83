#pragma once

#include <Eigen/Dense>

namespace amdyn {

struct CholResult {
  Eigen::MatrixXd L;     // lower-triangular factor of M + jitter*I
  double jitter = 0.0;   // diagonal shift that was needed
};

/// Cholesky factor of a symmetric PSD matrix. Tries the shifts 0, jitter, 10*jitter, ...,
/// 1e6*jitter in order and returns the first that factorizes. Throws PsdFailure when none does.
CholResult chol_psd(const Eigen::MatrixXd& M, double jitter = 1e-10);

}  // namespace amdyn
