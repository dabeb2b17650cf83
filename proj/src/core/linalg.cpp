#include "amdyn/core/linalg.hpp"

#include "amdyn/core/errors.hpp"

#include <cmath>
#include <sstream>

namespace amdyn {

CholResult chol_psd(const Eigen::MatrixXd& M, double jitter) {
  require(M.rows() >= 1 && M.rows() == M.cols(), "chol_psd: matrix must be square and non-empty");
  require(jitter > 0.0, "chol_psd: jitter must be positive");
  require(M.allFinite(), "chol_psd: matrix has non-finite entries");
  const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
  require((M - M.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale,
          "chol_psd: matrix is not symmetric");

  const auto n = M.rows();
  double eps = 0.0;
  for (int rung = 0; rung <= 7; ++rung) {
    Eigen::LLT<Eigen::MatrixXd> llt(M + eps * Eigen::MatrixXd::Identity(n, n));
    if (llt.info() == Eigen::Success) {
      Eigen::MatrixXd L = llt.matrixL();
      if (L.allFinite()) return {std::move(L), eps};
    }
    eps = (rung == 0) ? jitter : eps * 10.0;
  }
  std::ostringstream msg;
  msg << "chol_psd: matrix of size " << n << " is not PSD within jitter " << 1e6 * jitter
      << "; smallest eigenvalue "
      << Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(M, Eigen::EigenvaluesOnly)
             .eigenvalues()
             .minCoeff();
  throw PsdFailure(msg.str());
}

}  // namespace amdyn
