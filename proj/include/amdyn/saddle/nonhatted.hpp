#pragma once

#include "amdyn/saddle/order_params.hpp"

namespace amdyn {

/// Closed-form update of column t of the u side (m_u^t, R^t, q_u^{.t}, chi_u^{.t}) from the
/// hatted parameters at times <= t, followed by a refresh of gamma_u. Grows `params` by one
/// step when it holds t-1 steps.
void nonhatted_update_u(const HattedParams& hatted, double lambda, int t, OrderParams& params,
                        EffectiveProcessStats& gamma);

/// Same for the v side, which has no R term and no initial-condition overlap.
void nonhatted_update_v(const HattedParams& hatted, double lambda, int t, OrderParams& params,
                        EffectiveProcessStats& gamma);

}  // namespace amdyn
