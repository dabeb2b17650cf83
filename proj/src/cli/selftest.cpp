#include "amdyn/cli/selftest.hpp"

#include "amdyn/core/errors.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdio>
#include <sstream>

namespace amdyn {

GaussRule gauss_hermite(int n) {
  require(n >= 1, "gauss_hermite: need at least one node");
  // Golub-Welsch on the Jacobi matrix of the probabilists' Hermite polynomials.
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) J(i, i - 1) = J(i - 1, i) = std::sqrt(static_cast<double>(i));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(J);
  GaussRule rule;
  for (int i = 0; i < n; ++i) {
    rule.x.push_back(eig.eigenvalues()(i));
    const double v0 = eig.eigenvectors()(0, i);
    rule.w.push_back(v0 * v0);
  }
  return rule;
}

namespace {

double w_closed(double a, double b, double y, double chi) {
  return chi * a * (y - a * b) / (1.0 + chi * a * a);
}

double z_closed(double a, double b, double y, double chi) {
  return chi * b * (y - a * b) / (1.0 + chi * b * b);
}

}  // namespace

FirstStep quadrature_first_step(const ModelConfig& config, int points, double tol) {
  validate_theory_config(config);
  const GaussRule g = gauss_hermite(points);
  // Given the other fields, the u-side integrand is a quadratic polynomial in h^1.
  const GaussRule g5 = gauss_hermite(3);
  const int n = points;
  const double kappa = config.kappa;
  const double lambda = config.lambda;
  const double m0 = config.m0;
  const double s0 = std::sqrt(std::max(0.0, 1.0 - m0 * m0));
  const double damping = 0.5;
  const int max_iters = 2000;
  FirstStep fs;

  // v block: unknowns (m_v, q_v, chi_v).
  fs.m_v = 0.0;
  fs.q_v = 1.0;
  fs.chi_v = 1.0 / (lambda + kappa);
  for (int it = 0;; ++it) {
    require(it < max_iters, "quadrature_first_step: v block did not converge");
    const double sk = std::sqrt(std::max(0.0, fs.q_v - fs.m_v * fs.m_v));
    double e_ks_g = 0.0, e_k1_g = 0.0, e_w2 = 0.0;
    for (int i1 = 0; i1 < n; ++i1) {
      const double hs = g.x[i1];
      for (int i2 = 0; i2 < n; ++i2) {
        const double h0 = m0 * hs + s0 * g.x[i2];
        const double w12 = g.w[i1] * g.w[i2];
        for (int i3 = 0; i3 < n; ++i3) {
          const double ks = g.x[i3];
          const double y = hs * ks;
          const double w123 = w12 * g.w[i3];
          for (int i4 = 0; i4 < n; ++i4) {
            const double k1 = fs.m_v * ks + sk * g.x[i4];
            const double w = w_closed(h0, k1, y, fs.chi_v);
            const double K = k1 + w;
            const double grad = -h0 * (y - h0 * K);
            const double wt = w123 * g.w[i4];
            e_ks_g += wt * ks * grad;
            e_k1_g += wt * k1 * grad;
            e_w2 += wt * w * w;
          }
        }
      }
    }
    // Gaussian integration by parts: E[grad of g] = C^{-1} E[x g].
    Eigen::Matrix2d C;
    C << 1.0, fs.m_v, fs.m_v, fs.q_v;
    const Eigen::Vector2d d = C.ldlt().solve(Eigen::Vector2d(e_ks_g, e_k1_g));
    const double m_hat = -kappa * d(0);
    const double q_hat = kappa * d(1);
    const double chi_hat = kappa * e_w2 / (fs.chi_v * fs.chi_v);
    const double den = q_hat + lambda;
    require(den > 0.0, "quadrature_first_step: q_hat + lambda is not positive");
    const double m = m_hat / den;
    const double chi = 1.0 / den;
    const double q = (chi_hat / den + m_hat * m) / den;
    const double change = std::max({std::abs(m - fs.m_v), std::abs(q - fs.q_v), std::abs(chi - fs.chi_v)});
    fs.m_v += damping * (m - fs.m_v);
    fs.q_v += damping * (q - fs.q_v);
    fs.chi_v += damping * (chi - fs.chi_v);
    if (change < tol) break;
  }

  // u block: unknowns (m_u, R, q_u, chi_u), with the v block fixed.
  fs.m_u = 0.0;
  fs.R = 0.0;
  fs.q_u = 1.0;
  fs.chi_u = 1.0 / (lambda + kappa);
  const double sk = std::sqrt(std::max(0.0, fs.q_v - fs.m_v * fs.m_v));
  for (int it = 0;; ++it) {
    require(it < max_iters, "quadrature_first_step: u block did not converge");
    Eigen::Matrix3d C;
    C << 1.0, m0, fs.m_u, m0, 1.0, fs.R, fs.m_u, fs.R, fs.q_u;
    const Eigen::LLT<Eigen::Matrix3d> llt(C);
    require(llt.info() == Eigen::Success, "quadrature_first_step: u covariance is not PD");
    const Eigen::Matrix3d L = llt.matrixL();
    Eigen::Vector3d e_hf = Eigen::Vector3d::Zero();
    double e_z2 = 0.0;
    for (int i1 = 0; i1 < n; ++i1) {
      const double hs = L(0, 0) * g.x[i1];
      for (int i2 = 0; i2 < n; ++i2) {
        const double h0 = L(1, 0) * g.x[i1] + L(1, 1) * g.x[i2];
        const double w12 = g.w[i1] * g.w[i2];
        for (int i3 = 0; i3 < n; ++i3) {
          const double ks = g.x[i3];
          const double y = hs * ks;
          const double w123 = w12 * g.w[i3];
          for (int i4 = 0; i4 < n; ++i4) {
            const double k1 = fs.m_v * ks + sk * g.x[i4];
            const double K = k1 + w_closed(h0, k1, y, fs.chi_v);
            const double w1234 = w123 * g.w[i4];
            const double base = L(2, 0) * g.x[i1] + L(2, 1) * g.x[i2];
            for (int i5 = 0; i5 < 3; ++i5) {
              const double h1 = base + L(2, 2) * g5.x[i5];
              const double z = z_closed(h1, K, y, fs.chi_u);
              const double grad = -K * (y - (h1 + z) * K);
              const double wt = w1234 * g5.w[i5];
              e_hf(0) += wt * hs * grad;
              e_hf(1) += wt * h0 * grad;
              e_hf(2) += wt * h1 * grad;
              e_z2 += wt * z * z;
            }
          }
        }
      }
    }
    const Eigen::Vector3d d = llt.solve(e_hf);
    const double m_hat = -kappa * d(0);
    const double R_hat = -kappa * d(1);
    const double q_hat = kappa * d(2);
    const double chi_hat = kappa * e_z2 / (fs.chi_u * fs.chi_u);
    const double den = q_hat + lambda;
    require(den > 0.0, "quadrature_first_step: q_hat + lambda is not positive");
    const double m = (m_hat + m0 * R_hat) / den;
    const double R = (m_hat * m0 + R_hat) / den;
    const double chi = 1.0 / den;
    const double q = (chi_hat / den + m_hat * m + R_hat * R) / den;
    const double change = std::max({std::abs(m - fs.m_u), std::abs(R - fs.R),
                                    std::abs(q - fs.q_u), std::abs(chi - fs.chi_u)});
    fs.m_u += damping * (m - fs.m_u);
    fs.R += damping * (R - fs.R);
    fs.q_u += damping * (q - fs.q_u);
    fs.chi_u += damping * (chi - fs.chi_u);
    if (change < tol) break;
  }
  return fs;
}

std::array<double, 7> as_array(const FirstStep& f) {
  return {f.m_v, f.q_v, f.chi_v, f.m_u, f.R, f.q_u, f.chi_u};
}

FirstStep first_step_of(const SolveResult& result) {
  const OrderParams& p = result.params;
  require(p.t_u() >= 1, "first_step_of: result has no solved step");
  return {p.m_v[0], p.q_v(1, 1), p.chi_v(1, 1), p.m_u[0], p.R[0], p.q_u(1, 1), p.chi_u(1, 1)};
}

FirstStep first_step_of(const TrajectoryErrors& e) {
  require(!e.m_u.empty(), "first_step_of: empty error estimate");
  return {e.m_v[0], e.q_vv[0], e.chi_vv[0], e.m_u[0], e.R[0], e.q_uu[0], e.chi_uu[0]};
}

PathSolution replay_path(const OrderParams& params, const PathSources& src) {
  const int T = static_cast<int>(src.h.size());
  require(static_cast<int>(src.k.size()) == T, "replay_path: h and k lengths differ");
  require(params.t_u() >= T && params.t_v() >= T, "replay_path: order parameters too short");
  const double y = src.h_star * src.k_star;
  PathSolution out;
  double H = src.h0;
  for (int t = 1; t <= T; ++t) {
    double phi_v = src.k[t - 1];
    for (int s = 1; s < t; ++s) phi_v += params.chi_v(s, t) / params.chi_v(s, s) * out.w[s - 1];
    const double w = w_closed(H, phi_v, y, params.chi_v(t, t));
    const double K = phi_v + w;
    out.w.push_back(w);

    double phi_u = src.h[t - 1];
    for (int s = 1; s < t; ++s) phi_u += params.chi_u(s, t) / params.chi_u(s, s) * out.z[s - 1];
    const double z = z_closed(phi_u, K, y, params.chi_u(t, t));
    H = phi_u + z;
    out.z.push_back(z);
  }
  return out;
}

FdReport check_bookkeeping_fd(const SaddleSolver& solver, int paths, double step, double floor) {
  const McEnsemble& ens = solver.ensemble();
  const int T = ens.t_z();
  require(T >= 1 && ens.t_w() == T, "check_bookkeeping_fd: solver has no completed step");
  require(paths >= 1 && static_cast<std::size_t>(paths) <= ens.size(),
          "check_bookkeeping_fd: paths must lie in [1, n_mc]");
  const OrderParams& p = solver.params();
  FdReport rep;
  rep.paths = paths;
  for (int j = 0; j < paths; ++j) {
    const std::size_t i = static_cast<std::size_t>(j) * ens.size() / static_cast<std::size_t>(paths);
    PathSources base;
    base.h_star = ens.h_star(i);
    base.h0 = ens.h0(i);
    base.k_star = ens.k_star(i);
    for (int t = 1; t <= T; ++t) {
      base.h.push_back(ens.h(i, t));
      base.k.push_back(ens.k(i, t));
    }
    // Source j in the layout of Source: h_star, h0, k_star, h^1, k^1, ...
    auto source = [](PathSources& s, int idx) -> double& {
      if (idx == Source::h_star) return s.h_star;
      if (idx == Source::h0) return s.h0;
      if (idx == Source::k_star) return s.k_star;
      const int t = (idx - 3) / 2 + 1;
      return (idx - 3) % 2 == 0 ? s.h[t - 1] : s.k[t - 1];
    };
    for (int idx = 0; idx < Source::count(T); ++idx) {
      PathSources plus = base, minus = base;
      source(plus, idx) += step;
      source(minus, idx) -= step;
      const PathSolution a = replay_path(p, plus);
      const PathSolution b = replay_path(p, minus);
      for (int s = 1; s <= T; ++s) {
        if (idx >= Source::count(s)) continue;
        for (int side = 0; side < 2; ++side) {
          const double fd = side == 0 ? (a.z[s - 1] - b.z[s - 1]) / (2.0 * step)
                                      : (a.w[s - 1] - b.w[s - 1]) / (2.0 * step);
          const double stored = side == 0 ? ens.dz(i, s)[idx] : ens.dw(i, s)[idx];
          const double rel = std::abs(stored - fd) / std::max(std::abs(stored), floor);
          ++rep.entries;
          if (!(rel <= rep.max_rel_error)) {
            rep.max_rel_error = std::isfinite(rel) ? rel : INFINITY;
            std::ostringstream where;
            where << "path " << i << ", d" << (side == 0 ? "z" : "w") << "^" << s
                  << " / source " << idx << ": stored " << stored << ", fd " << fd;
            rep.worst = where.str();
          }
        }
      }
    }
  }
  return rep;
}

bool run_selftest(const SelftestOptions& opts, std::ostream& out) {
  bool ok = true;
  char line[256];

  {
    ModelConfig config;
    config.kappa = 3.0;
    config.m0 = 0.6;
    config.lambda = 0.01;
    config.t_max = 1;
    SolveOptions so;
    so.n_mc = opts.n_mc;
    so.seed = opts.seed;
    so.workers = opts.workers;
    const FirstStep oracle = quadrature_first_step(config);
    const FirstStep mc = first_step_of(solve(config, so));
    const FirstStep se = first_step_of(estimate_trajectory_errors(config, so, opts.sections));
    const char* names[] = {"m_v", "q_v", "chi_v", "m_u", "R", "q_u", "chi_u"};
    const auto o = as_array(oracle);
    const auto m = as_array(mc);
    const auto s = as_array(se);
    for (int j = 0; j < 7; ++j) {
      const double z = std::abs(m[j] - o[j]) / s[j];
      const bool pass = z <= 3.0;
      ok = ok && pass;
      std::snprintf(line, sizeof line, "%s quadrature t=1 %-5s  mc %.6f  oracle %.6f  se %.2e  |z| %.2f\n",
                    pass ? "PASS" : "FAIL", names[j], m[j], o[j], s[j], z);
      out << line;
    }
  }

  {
    ModelConfig config;
    config.kappa = 5.0;
    config.m0 = 0.3;
    config.t_max = 4;
    SolveOptions so;
    so.n_mc = opts.fd_n_mc;
    so.seed = opts.seed;
    so.workers = opts.workers;
    SaddleSolver solver(config, so);
    solver.run();
    const FdReport rep = check_bookkeeping_fd(solver);
    const bool pass = rep.max_rel_error <= 1e-4;
    ok = ok && pass;
    std::snprintf(line, sizeof line,
                  "%s finite differences T=4  %zu derivatives on %d paths  max rel error %.2e\n",
                  pass ? "PASS" : "FAIL", rep.entries, rep.paths, rep.max_rel_error);
    out << line;
    if (!pass) out << "     worst: " << rep.worst << "\n";
  }
  return ok;
}

}  // namespace amdyn
