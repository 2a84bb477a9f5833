// SPDX-License-Identifier: Apache-2.0
//
// Differentiable sphere charts shared by the losses and their tests.
#pragma once

#include "mawgan/model.hpp"
#include "mawgan/nn/tape.hpp"

namespace mawgan::detail {

/// Rows of v are tangent-space coordinates at the 1 x d reference `mu`;
/// the component along mu is dropped before mapping.
nn::Var exp_at(nn::Var v, nn::Var mu, double dt);
/// Inverse chart, with the acos argument clamped to |u| <= 1 - 1e-7.
nn::Var log_at(nn::Var q, nn::Var mu, double dt);

struct Forecast {
  nn::Var v;     ///< predictor output
  nn::Var q_hat; ///< exp at mu
  nn::Var fake;  ///< log at mu of q_hat, the critic's input
};

Forecast forecast(nn::Tape &tape, const TrainState &state, const Tensor &prior_tangent,
                  bool trainable);

/// Poses integrated from `last_pose` along q_hat scaled per row.
nn::Var reconstruct(nn::Tape &tape, nn::Var q_hat, const Tensor &target_scale,
                    const Tensor &last_pose, double dt);

/// Largest componentwise |fake - tangent part of v|, relative to
/// max(1, |v|_inf), over rows inside the injectivity radius.
double chart_error(const Tensor &v, const Tensor &fake, const Tensor &mu, double dt);

} // namespace mawgan::detail
