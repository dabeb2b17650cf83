#include "amdyn/saddle/ensemble.hpp"

#include "amdyn/core/errors.hpp"
#include "amdyn/core/linalg.hpp"
#include "amdyn/core/parallel.hpp"
#include "amdyn/saddle/prox.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace amdyn {

namespace {

// Stream ids for the base normals: 0 bootstraps, then one stream per (t, phase).
std::uint64_t field_stream(int t, Phase phase) {
  return 1 + 2 * static_cast<std::uint64_t>(t) + (phase == Phase::u ? 1 : 0);
}

bool is_quadratic(const Loss& loss) { return dynamic_cast<const QuadraticLoss*>(&loss) != nullptr; }

}  // namespace

std::size_t McEnsemble::doubles_per_sample(int t_max) {
  const std::size_t T = static_cast<std::size_t>(t_max);
  const std::size_t derivs = T * T + 4 * T;
  return 4 + (T + 2) + (T + 1) + 6 * T + 2 * (2 * T + 3) + 2 * derivs;
}

McEnsemble::McEnsemble(std::size_t n_mc, int t_max, double m0, std::uint64_t seed, double jitter)
    : n_(n_mc), t_max_(t_max), m0_(m0), seed_(seed), jitter_(jitter) {
  require(n_mc >= 1, "McEnsemble: n_mc must be >= 1");
  require(t_max >= 1, "McEnsemble: t_max must be >= 1");
  require(m0 >= -1.0 && m0 <= 1.0, "McEnsemble: m0 must lie in [-1, 1]");
  const std::size_t T = static_cast<std::size_t>(t_max);
  o_xi_u_ = 4;
  o_xi_v_ = o_xi_u_ + T + 2;
  o_h_ = o_xi_v_ + T + 1;
  o_k_ = o_h_ + T;
  o_z_ = o_k_ + T;
  o_w_ = o_z_ + T;
  o_H_ = o_w_ + T;
  o_K_ = o_H_ + T;
  o_dH_ = o_K_ + T;
  o_dK_ = o_dH_ + 2 * T + 3;
  stride_ = o_dK_ + 2 * T + 3;
  data_.assign(n_ * stride_, 0.0);
  for (int s = 1; s <= t_max; ++s) {
    dz_.emplace_back(n_ * static_cast<std::size_t>(Source::count(s)), 0.0);
    dw_.emplace_back(n_ * static_cast<std::size_t>(Source::count(s)), 0.0);
  }

  Eigen::MatrixXd top(2, 2);
  top << 1.0, m0, m0, 1.0;
  const Eigen::MatrixXd L = chol_psd(top, jitter).L;
  const RngStream rng = RngStream(seed, 0).derive(0);
  for (std::size_t i = 0; i < n_; ++i) {
    double* r = rec(i);
    const double xs = rng.normal(3 * i), x0 = rng.normal(3 * i + 1), xk = rng.normal(3 * i + 2);
    r[o_xi_u_] = xs;
    r[o_xi_u_ + 1] = x0;
    r[o_xi_v_] = xk;
    r[kHStar] = L(0, 0) * xs;
    r[kH0] = L(1, 0) * xs + L(1, 1) * x0;
    r[kKStar] = xk;
    r[kY] = r[kHStar] * r[kKStar];
    r[o_dH_ + Source::h0] = 1.0;  // H^0 = h0
  }
}

// Per-stage plans: validation and per-step constants are computed once, the per-sample
// kernels below apply them. The separate operations and the fused pass share the kernels.
struct McEnsemble::FieldPlan {
  Eigen::VectorXd row;
  std::size_t o_xi = 0, o_field = 0;
  bool fresh = false;
  RngStream rng{0, 0};
  double jitter = 0.0;
};

struct McEnsemble::StepPlan {
  bool u = false;
  int t = 0;
  double chi_tt = 0.0;
  std::vector<double> c;  // chi^{st} / chi^{ss} for s < t
  int n_t = 0, width = 0;
  bool quad = false;
  const Loss* loss = nullptr;
};

struct McEnsemble::HatPlan {
  bool u = false;
  int t = 0;
  double kappa = 0.0;
  std::vector<double> inv_chi;
  int cols = 0;
  bool quad = false;
  const Loss* loss = nullptr;
};

McEnsemble::FieldPlan McEnsemble::plan_fields(const OrderParams& params, int t, Phase phase) {
  const bool u = phase == Phase::u;
  require(t >= 1 && t <= t_max_, "sample_fields: t out of range");
  const int have = u ? t_h_ : t_k_;
  require(t == have || t == have + 1, "sample_fields: fields must be drawn in time order");
  require((u ? params.t_u() : params.t_v()) >= t, "sample_fields: order parameters missing for t");

  // The leading block holds accepted parameters and is factorized with the jitter ladder.
  // The new row is completed by hand with its pivot clamped at zero, so the drawn field is
  // a continuous function of the column being iterated.
  const Eigen::MatrixXd M = u ? params.bordered_u(t) : params.bordered_v(t);
  const Eigen::Index last = M.rows() - 1;
  const auto fac = chol_psd(M.topLeftCorner(last, last), jitter_);
  FieldPlan plan;
  plan.row.resize(last + 1);
  plan.row.head(last) = fac.L.triangularView<Eigen::Lower>().solve(M.col(last).head(last));
  const double pivot = M(last, last) + fac.jitter - plan.row.head(last).squaredNorm();
  const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
  if (!std::isfinite(pivot) || pivot < -1e6 * jitter_ * scale) {
    std::ostringstream msg;
    msg << "sample_fields: bordered covariance at t=" << t << " (" << (u ? "u" : "v")
        << " side) is not PSD; conditional variance " << pivot;
    throw PsdFailure(msg.str());
  }
  plan.row(last) = std::sqrt(std::max(pivot, 0.0));
  plan.o_xi = u ? o_xi_u_ : o_xi_v_;
  plan.o_field = (u ? o_h_ : o_k_) + t - 1;
  int& drawn = u ? drawn_u_ : drawn_v_;
  plan.fresh = drawn < t;
  plan.rng = RngStream(seed_, 0).derive(field_stream(t, phase));
  plan.jitter = fac.jitter;
  drawn = std::max(drawn, t);
  (u ? t_h_ : t_k_) = t;
  return plan;
}

void McEnsemble::draw_field(const FieldPlan& plan, std::size_t i) {
  double* r = rec(i);
  const Eigen::Index last = plan.row.size() - 1;
  if (plan.fresh) r[plan.o_xi + last] = plan.rng.normal(i);
  double f = 0.0;
  for (Eigen::Index j = 0; j <= last; ++j) f += plan.row(j) * r[plan.o_xi + j];
  r[plan.o_field] = f;
}

McEnsemble::StepPlan McEnsemble::plan_step(const OrderParams& params, int t, Phase phase,
                                           const Loss& loss) {
  const bool u = phase == Phase::u;
  require(t >= 1 && t <= t_max_, "propagate_step: t out of range");
  if (u) {
    require(t_w_ == t && (t_z_ == t - 1 || t_z_ == t),
            "propagate_step: u phase of step t needs the v phase of step t");
    require(t_h_ >= t && params.t_u() >= t, "propagate_step: h^t or chi_u missing");
  } else {
    require(t_z_ == t - 1 && (t_w_ == t - 1 || t_w_ == t),
            "propagate_step: v phase of step t needs the u phase of step t-1");
    require(t_k_ >= t && params.t_v() >= t, "propagate_step: k^t or chi_v missing");
  }
  const TriMatrix& chi = u ? params.chi_u : params.chi_v;
  StepPlan plan;
  plan.u = u;
  plan.t = t;
  plan.chi_tt = chi(t, t);
  require(plan.chi_tt > 0.0, "propagate_step: chi^{tt} must be positive");
  plan.c.assign(static_cast<std::size_t>(t), 0.0);
  for (int s = 1; s < t; ++s) plan.c[s - 1] = chi(s, t) / chi(s, s);
  plan.n_t = Source::count(t);
  plan.width = Source::count(t_max_);
  plan.quad = is_quadratic(loss);
  plan.loss = &loss;
  (u ? t_z_ : t_w_) = t;
  return plan;
}

void McEnsemble::step_sample(const StepPlan& plan, std::size_t i, double* dphi) {
  const bool u = plan.u;
  const int t = plan.t;
  const int n_t = plan.n_t;
  double* r = rec(i);
  const double y = r[kY];
  std::fill(dphi, dphi + n_t, 0.0);
  double phi = r[(u ? o_h_ : o_k_) + t - 1];
  dphi[u ? Source::h(t) : Source::k(t)] = 1.0;
  for (int s = 1; s < t; ++s) {
    const double cs = plan.c[s - 1];
    phi += cs * r[(u ? o_z_ : o_w_) + s - 1];
    const double* d = u ? deriv_z(i, s) : deriv_w(i, s);
    const int len = Source::count(s);
    for (int j = 0; j < len; ++j) dphi[j] += cs * d[j];
  }

  // The other side's field is fixed during this phase; its derivative is cached.
  ProxResult pr;
  double* out;
  const double* other;
  if (u) {
    const double b = r[o_K_ + t - 1];
    pr = plan.quad ? prox_u_quadratic(phi, b, y, plan.chi_tt)
                   : prox_u(phi, b, y, plan.chi_tt, *plan.loss);
    out = deriv_z(i, t);
    other = r + o_dK_;
  } else {
    const double a = (t == 1) ? r[kH0] : r[o_H_ + t - 2];
    pr = plan.quad ? prox_v_quadratic(a, phi, y, plan.chi_tt)
                   : prox_v(a, phi, y, plan.chi_tt, *plan.loss);
    out = deriv_w(i, t);
    other = r + o_dH_;
  }
  if (!std::isfinite(pr.value)) {
    std::ostringstream msg;
    msg << "propagate_step: non-finite solution at sample " << i << ", t=" << t;
    throw NumericalFailure(msg.str());
  }
  const double d_own = u ? pr.d_a : pr.d_b;
  const double d_other = u ? pr.d_b : pr.d_a;
  for (int j = 0; j < n_t; ++j) out[j] = d_own * dphi[j] + d_other * other[j];
  out[Source::h_star] += pr.d_y * r[kKStar];
  out[Source::k_star] += pr.d_y * r[kHStar];

  double* own_total = r + (u ? o_dH_ : o_dK_);
  for (int j = 0; j < n_t; ++j) own_total[j] = dphi[j] + out[j];
  std::fill(own_total + n_t, own_total + plan.width, 0.0);
  r[(u ? o_z_ : o_w_) + t - 1] = pr.value;
  r[(u ? o_H_ : o_K_) + t - 1] = phi + pr.value;
}

McEnsemble::HatPlan McEnsemble::plan_hatted(const OrderParams& params, double kappa, int t,
                                            Phase phase, const Loss& loss) const {
  const bool u = phase == Phase::u;
  if (u) {
    require(t_z_ == t && t_w_ == t, "hatted_update_u: ensemble not propagated to u^t");
  } else {
    require(t_w_ == t && t_z_ == t - 1, "hatted_update_v: ensemble not propagated to v^t");
  }
  require(kappa >= 0.0, "hatted_update: kappa must be non-negative");
  const TriMatrix& chi = u ? params.chi_u : params.chi_v;
  HatPlan plan;
  plan.u = u;
  plan.t = t;
  plan.kappa = kappa;
  for (int s = 1; s <= t; ++s) plan.inv_chi.push_back(1.0 / chi(s, s));
  plan.cols = 2 * t + 2;
  plan.quad = is_quadratic(loss);
  plan.loss = &loss;
  return plan;
}

// Columns: 0 m_hat, 1 R_hat, 2..t+1 q_hat^{st}, t+2..2t+1 chi_hat^{st}.
void McEnsemble::hatted_sample(const HatPlan& plan, std::size_t i, double* vals) const {
  const bool u = plan.u;
  const int t = plan.t;
  const double kappa = plan.kappa;
  const double* r = rec(i);
  const double a = u ? H(i, t) : H(i, t - 1);
  const double b = r[o_K_ + t - 1];
  const LossPartials p =
      plan.quad ? quadratic_loss().partials(a, b, r[kY]) : plan.loss->partials(a, b, r[kY]);
  const double* dH = r + o_dH_;
  const double* dK = r + o_dK_;
  // Total derivative of the own-side loss gradient with respect to source j.
  const double c_H = u ? p.d11 : p.d12;
  const double c_K = u ? p.d12 : p.d22;
  const double c_y = u ? p.dy1 : p.dy2;
  auto total = [&](int j) { return c_H * dH[j] + c_K * dK[j]; };
  vals[0] = u ? -kappa * (total(Source::h_star) + c_y * r[kKStar])
              : -kappa * (total(Source::k_star) + c_y * r[kHStar]);
  vals[1] = u ? -kappa * total(Source::h0) : 0.0;
  const double* x = r + (u ? o_z_ : o_w_);
  const double* inv_chi = plan.inv_chi.data();
  const double kx_t = kappa * x[t - 1] * inv_chi[t - 1];
  const int first = u ? Source::h(1) : Source::k(1);
  for (int s = 1; s <= t; ++s) vals[1 + s] = -kappa * total(first + 2 * (s - 1));
  vals[1 + t] = -vals[1 + t];
  for (int s = 1; s <= t; ++s) vals[t + 1 + s] = kx_t * x[s - 1] * inv_chi[s - 1];
}

namespace {

// Accumulates the per-sample values of every column bucket by bucket, each bucket in
// sample order, so results do not depend on the worker count.
template <class PerSample>
HattedEstimate reduce_buckets(std::size_t n, std::size_t buckets, std::size_t workers, int cols,
                              bool u, int t, PerSample&& per_sample) {
  const std::size_t n_buckets = std::min(buckets, n);
  std::vector<BucketMoments> moments(n_buckets * static_cast<std::size_t>(cols));
  parallel_for(n_buckets, workers, [&](std::size_t b_lo, std::size_t b_hi, std::size_t worker) {
    std::vector<double> vals(static_cast<std::size_t>(cols));
    std::vector<double> shift(vals.size()), sum(vals.size()), sum_sq(vals.size());
    for (std::size_t b = b_lo; b < b_hi; ++b) {
      const std::size_t begin = bucket_begin(b, n, n_buckets);
      const std::size_t end = bucket_begin(b + 1, n, n_buckets);
      for (std::size_t i = begin; i < end; ++i) {
        per_sample(i, vals.data(), worker);
        if (i == begin) {
          std::copy(vals.begin(), vals.end(), shift.begin());
          std::fill(sum.begin(), sum.end(), 0.0);
          std::fill(sum_sq.begin(), sum_sq.end(), 0.0);
        }
        for (int c = 0; c < cols; ++c) {
          const double d = vals[c] - shift[c];
          sum[c] += d;
          sum_sq[c] += d * d;
        }
      }
      BucketMoments* mom = moments.data() + b * static_cast<std::size_t>(cols);
      for (int c = 0; c < cols; ++c) mom[c] = {end - begin, shift[c], sum[c], sum_sq[c]};
    }
  });

  std::vector<BucketMoments> column(n_buckets);
  auto est = [&](int col) {
    for (std::size_t b = 0; b < n_buckets; ++b) {
      column[b] = moments[b * static_cast<std::size_t>(cols) + col];
    }
    const Estimate e = estimate_from_buckets(column);
    if (!std::isfinite(e.value) || !std::isfinite(e.mean)) {
      std::ostringstream msg;
      msg << "hatted_update_" << (u ? "u" : "v") << ": non-finite average in column " << col
          << " at t=" << t;
      throw NumericalFailure(msg.str());
    }
    return e;
  };
  HattedEstimate out;
  out.m_hat = est(0);
  out.R_hat = est(1);
  for (int s = 1; s <= t; ++s) {
    out.q_hat.push_back(est(1 + s));
    // chi_hat is a second-moment matrix of the noises; the plain mean keeps it a Gram
    // matrix of the sampled x^s, which the median of bucket means does not.
    Estimate e = est(t + 1 + s);
    e.value = e.mean;
    out.chi_hat.push_back(e);
  }
  return out;
}

}  // namespace

double sample_fields(McEnsemble& ens, const OrderParams& params, int t, Phase phase,
                     std::size_t workers) {
  const McEnsemble::FieldPlan plan = ens.plan_fields(params, t, phase);
  parallel_for(ens.n_, workers, [&](std::size_t lo, std::size_t hi, std::size_t) {
    for (std::size_t i = lo; i < hi; ++i) ens.draw_field(plan, i);
  });
  return plan.jitter;
}

void propagate_step(McEnsemble& ens, const OrderParams& params, int t, Phase phase,
                    const Loss& loss, std::size_t workers) {
  const McEnsemble::StepPlan plan = ens.plan_step(params, t, phase, loss);
  parallel_for(ens.n_, workers, [&](std::size_t lo, std::size_t hi, std::size_t) {
    std::vector<double> dphi(static_cast<std::size_t>(plan.width));
    for (std::size_t i = lo; i < hi; ++i) ens.step_sample(plan, i, dphi.data());
  });
}

HattedEstimate hatted_update_v(const McEnsemble& ens, const OrderParams& params, double kappa,
                               int t, const Loss& loss, std::size_t workers, std::size_t buckets) {
  const auto plan = ens.plan_hatted(params, kappa, t, Phase::v, loss);
  return reduce_buckets(ens.size(), buckets, workers, plan.cols, false, t,
                        [&](std::size_t i, double* vals, std::size_t) {
                          ens.hatted_sample(plan, i, vals);
                        });
}

HattedEstimate hatted_update_u(const McEnsemble& ens, const OrderParams& params, double kappa,
                               int t, const Loss& loss, std::size_t workers, std::size_t buckets) {
  const auto plan = ens.plan_hatted(params, kappa, t, Phase::u, loss);
  return reduce_buckets(ens.size(), buckets, workers, plan.cols, true, t,
                        [&](std::size_t i, double* vals, std::size_t) {
                          ens.hatted_sample(plan, i, vals);
                        });
}

HattedEstimate evaluate_step(McEnsemble& ens, const OrderParams& params, double kappa, int t,
                             Phase phase, const Loss& loss, std::size_t workers,
                             std::size_t buckets, double* jitter) {
  const McEnsemble::FieldPlan fields = ens.plan_fields(params, t, phase);
  const McEnsemble::StepPlan step = ens.plan_step(params, t, phase, loss);
  const McEnsemble::HatPlan hat = ens.plan_hatted(params, kappa, t, phase, loss);
  if (jitter) *jitter = fields.jitter;
  const std::size_t n_workers = std::max<std::size_t>(1, std::min(workers, std::min(buckets, ens.n_)));
  std::vector<std::vector<double>> dphi(n_workers,
                                        std::vector<double>(static_cast<std::size_t>(step.width)));
  return reduce_buckets(ens.n_, buckets, n_workers, hat.cols, phase == Phase::u, t,
                        [&](std::size_t i, double* vals, std::size_t worker) {
                          ens.draw_field(fields, i);
                          ens.step_sample(step, i, dphi[worker].data());
                          ens.hatted_sample(hat, i, vals);
                        });
}

}  // namespace amdyn
