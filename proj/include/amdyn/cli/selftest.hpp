#pragma once

#include "amdyn/saddle/solve.hpp"

#include <array>
#include <ostream>
#include <string>
#include <vector>

namespace amdyn {

/// Nodes and weights of n-point Gauss-Hermite quadrature for the standard normal density.
struct GaussRule {
  std::vector<double> x;
  std::vector<double> w;
};
GaussRule gauss_hermite(int n);

/// First-step order parameters of both blocks.
struct FirstStep {
  double m_v = 0.0, q_v = 0.0, chi_v = 0.0;
  double m_u = 0.0, R = 0.0, q_u = 0.0, chi_u = 0.0;
};

/// The t=1 fixed point for the quadratic loss with every expectation computed by tensor
/// Gauss-Hermite quadrature. Expected loss derivatives are obtained from Gaussian
/// integration by parts, so no derivative of the scalar problems is evaluated.
FirstStep quadrature_first_step(const ModelConfig& config, int points = 48, double tol = 1e-12);

/// (m_v, q_v, chi_v, m_u, R, q_u, chi_u).
std::array<double, 7> as_array(const FirstStep& f);

/// The same quantities read from a solver result.
FirstStep first_step_of(const SolveResult& result);
/// Their standard errors from a sectioned error estimate.
FirstStep first_step_of(const TrajectoryErrors& errors);

/// Replays the scalar problems of one sample path from its source fields, for the
/// quadratic loss: z^t and w^t for t = 1..T given the order parameters.
struct PathSources {
  double h_star = 0.0, h0 = 0.0, k_star = 0.0;
  std::vector<double> h, k;  // h^1..h^T, k^1..k^T
};
struct PathSolution {
  std::vector<double> z, w;
};
PathSolution replay_path(const OrderParams& params, const PathSources& sources);

struct FdReport {
  int paths = 0;
  std::size_t entries = 0;      // derivatives compared
  double max_rel_error = 0.0;
  std::string worst;            // location of the largest error
};

/// Compares every stored derivative of z^s and w^s (s = 1..T) on `paths` evenly spaced
/// samples of a solved ensemble with central differences of replay_path. The relative
/// error is |stored - fd| / max(|stored|, floor).
FdReport check_bookkeeping_fd(const SaddleSolver& solver, int paths = 100, double step = 1e-5,
                              double floor = 1e-3);

struct SelftestOptions {
  std::size_t n_mc = 200'000;   // paths of the oracle comparison solve
  int sections = 10;            // independent sections for its standard errors
  std::size_t fd_n_mc = 20'000; // paths of the solve whose derivatives are checked
  std::uint64_t seed = 1;
  std::size_t workers = 0;
};

/// Runs the t=1 quadrature comparison and the finite-difference check, printing one line
/// per check. Returns true when every check passes.
bool run_selftest(const SelftestOptions& opts, std::ostream& out);

}  // namespace amdyn
