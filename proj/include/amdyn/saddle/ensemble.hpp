#pragma once

#include "amdyn/am_sim/loss.hpp"
#include "amdyn/core/rng.hpp"
#include "amdyn/core/stats.hpp"
#include "amdyn/saddle/order_params.hpp"

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

namespace amdyn {

enum class Phase { v, u };

/// Estimates of the hatted parameters at step t: medians of bucket means, except chi_hat
/// which uses the plain mean. q_hat[s-1] and chi_hat[s-1] hold the (s, t) entries for
/// s = 1..t. R_hat is zero on the v side.
struct HattedEstimate {
  Estimate m_hat;
  Estimate R_hat;
  std::vector<Estimate> q_hat;
  std::vector<Estimate> chi_hat;
};

/// Position of a source field in the per-sample derivative vectors. The derivatives of
/// z^s and w^s occupy the prefix of length count(s): (h_star, h0, k_star, h^1, k^1, ...,
/// h^s, k^s). dw^s/dh^s is structurally zero but stored.
struct Source {
  static constexpr int h_star = 0;
  static constexpr int h0 = 1;
  static constexpr int k_star = 2;
  static constexpr int h(int t) { return 3 + 2 * (t - 1); }
  static constexpr int k(int t) { return 4 + 2 * (t - 1); }
  static constexpr int count(int t) { return 2 * t + 3; }
};

/// Sampled paths of the effective process. Per-sample scalars live in one fixed-stride
/// record per sample; the derivatives of each z^s and w^s live in their own array, so a
/// step streams through contiguous memory.
class McEnsemble {
 public:
  /// Draws h_star, h0 (correlation m0) and k_star for every sample.
  McEnsemble(std::size_t n_mc, int t_max, double m0, std::uint64_t seed, double jitter = 1e-10);

  static std::size_t doubles_per_sample(int t_max);

  std::size_t size() const { return n_; }
  int t_max() const { return t_max_; }
  double m0() const { return m0_; }
  std::uint64_t seed() const { return seed_; }
  double jitter() const { return jitter_; }
  int t_h() const { return t_h_; }  // fields h^1..h^t_h drawn
  int t_k() const { return t_k_; }
  int t_z() const { return t_z_; }  // solutions z^1..z^t_z computed
  int t_w() const { return t_w_; }

  double h_star(std::size_t i) const { return rec(i)[kHStar]; }
  double h0(std::size_t i) const { return rec(i)[kH0]; }
  double k_star(std::size_t i) const { return rec(i)[kKStar]; }
  double y(std::size_t i) const { return rec(i)[kY]; }
  double h(std::size_t i, int t) const { return rec(i)[o_h_ + t - 1]; }
  double k(std::size_t i, int t) const { return rec(i)[o_k_ + t - 1]; }
  double z(std::size_t i, int t) const { return rec(i)[o_z_ + t - 1]; }
  double w(std::size_t i, int t) const { return rec(i)[o_w_ + t - 1]; }
  /// Field seen by the loss on the u side after step t (H^0 = h0).
  double H(std::size_t i, int t) const { return t == 0 ? h0(i) : rec(i)[o_H_ + t - 1]; }
  double K(std::size_t i, int t) const { return rec(i)[o_K_ + t - 1]; }

  /// Base normals: u side (h_star, h0, h^1, ...), v side (k_star, k^1, ...).
  double base_normal_u(std::size_t i, int j) const { return rec(i)[o_xi_u_ + j]; }
  double base_normal_v(std::size_t i, int j) const { return rec(i)[o_xi_v_ + j]; }

  /// Derivatives of z^s and w^s with respect to the sources, length Source::count(s).
  const double* dz(std::size_t i, int s) const { return deriv_z(i, s); }
  const double* dw(std::size_t i, int s) const { return deriv_w(i, s); }

  double A(std::size_t i, int tp, int t) const { return dz(i, t)[Source::h(tp)]; }
  double B(std::size_t i, int tp, int t) const { return dw(i, t)[Source::h(tp)]; }
  double C(std::size_t i, int tp, int t) const { return dz(i, t)[Source::k(tp)]; }
  double D(std::size_t i, int tp, int t) const { return dw(i, t)[Source::k(tp)]; }
  double A_star(std::size_t i, int t) const { return dz(i, t)[Source::h_star]; }
  double B_star(std::size_t i, int t) const { return dw(i, t)[Source::h_star]; }
  double A_0(std::size_t i, int t) const { return dz(i, t)[Source::h0]; }
  double B_0(std::size_t i, int t) const { return dw(i, t)[Source::h0]; }
  double C_star(std::size_t i, int t) const { return dz(i, t)[Source::k_star]; }
  double D_star(std::size_t i, int t) const { return dw(i, t)[Source::k_star]; }

  /// Total derivatives of the latest H and K with respect to the sources.
  const double* dH_latest(std::size_t i) const { return rec(i) + o_dH_; }
  const double* dK_latest(std::size_t i) const { return rec(i) + o_dK_; }

 private:
  friend double sample_fields(McEnsemble&, const OrderParams&, int, Phase, std::size_t);
  friend void propagate_step(McEnsemble&, const OrderParams&, int, Phase, const Loss&,
                             std::size_t);
  friend HattedEstimate hatted_update_v(const McEnsemble&, const OrderParams&, double,
                                               int, const Loss&, std::size_t, std::size_t);
  friend HattedEstimate hatted_update_u(const McEnsemble&, const OrderParams&, double,
                                               int, const Loss&, std::size_t, std::size_t);
  friend HattedEstimate evaluate_step(McEnsemble&, const OrderParams&, double, int, Phase,
                                             const Loss&, std::size_t, std::size_t, double*);

  struct FieldPlan;
  struct StepPlan;
  struct HatPlan;
  FieldPlan plan_fields(const OrderParams& params, int t, Phase phase);
  void draw_field(const FieldPlan& plan, std::size_t i);
  StepPlan plan_step(const OrderParams& params, int t, Phase phase, const Loss& loss);
  void step_sample(const StepPlan& plan, std::size_t i, double* dphi);
  HatPlan plan_hatted(const OrderParams& params, double kappa, int t, Phase phase,
                      const Loss& loss) const;
  void hatted_sample(const HatPlan& plan, std::size_t i, double* vals) const;

  static constexpr int kHStar = 0, kH0 = 1, kKStar = 2, kY = 3;

  const double* rec(std::size_t i) const { return data_.data() + i * stride_; }
  double* rec(std::size_t i) { return data_.data() + i * stride_; }
  const double* deriv_z(std::size_t i, int s) const {
    return dz_[s - 1].data() + i * static_cast<std::size_t>(Source::count(s));
  }
  const double* deriv_w(std::size_t i, int s) const {
    return dw_[s - 1].data() + i * static_cast<std::size_t>(Source::count(s));
  }
  double* deriv_z(std::size_t i, int s) { return const_cast<double*>(std::as_const(*this).deriv_z(i, s)); }
  double* deriv_w(std::size_t i, int s) { return const_cast<double*>(std::as_const(*this).deriv_w(i, s)); }

  std::size_t n_;
  int t_max_;
  double m0_;
  std::uint64_t seed_;
  double jitter_;
  std::size_t stride_;
  std::size_t o_xi_u_, o_xi_v_, o_h_, o_k_, o_z_, o_w_, o_H_, o_K_, o_dH_, o_dK_;
  int t_h_ = 0, t_k_ = 0, t_z_ = 0, t_w_ = 0;
  int drawn_u_ = 0, drawn_v_ = 0;  // times whose base normals are drawn
  std::vector<double> data_;
  std::vector<std::vector<double>> dz_, dw_;  // index s-1: n x count(s), row per sample
};

/// Draws h^t (phase u) or k^t (phase v) for every sample from the current bordered
/// covariance. Base normals for (t, phase) are drawn on the first call and reused
/// afterwards. Returns the Cholesky jitter that was needed.
double sample_fields(McEnsemble& ens, const OrderParams& params, int t, Phase phase,
                     std::size_t workers = 1);

/// Solves the scalar problem of step t, phase v (w^t) or u (z^t), for every sample and
/// updates the bookkeeping derivatives. Phases must advance v1, u1, v2, u2, ...; repeating
/// the latest phase is allowed.
void propagate_step(McEnsemble& ens, const OrderParams& params, int t, Phase phase,
                    const Loss& loss = quadratic_loss(), std::size_t workers = 1);


HattedEstimate hatted_update_v(const McEnsemble& ens, const OrderParams& params, double kappa,
                               int t, const Loss& loss = quadratic_loss(),
                               std::size_t workers = 1, std::size_t buckets = kDefaultBuckets);

HattedEstimate hatted_update_u(const McEnsemble& ens, const OrderParams& params, double kappa,
                               int t, const Loss& loss = quadratic_loss(),
                               std::size_t workers = 1, std::size_t buckets = kDefaultBuckets);

/// sample_fields, propagate_step and the hatted update of the same phase fused into one
/// pass over the samples; the results equal calling the three in sequence. Stores the
/// Cholesky jitter in `jitter` when it is not null.
HattedEstimate evaluate_step(McEnsemble& ens, const OrderParams& params, double kappa, int t,
                             Phase phase, const Loss& loss = quadratic_loss(),
                             std::size_t workers = 1, std::size_t buckets = kDefaultBuckets,
                             double* jitter = nullptr);

}  // namespace amdyn
