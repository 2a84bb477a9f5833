// SPDX-License-Identifier: Apache-2.0

#include "mawgan/nn/adam.hpp"

#include <cmath>
#include <string>

namespace mawgan::nn {

void AdamConfig::validate() const {
  if (!(lr > 0.0) || !std::isfinite(lr))
    fail(ErrorKind::argument, "learning rate must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    fail(ErrorKind::argument, "Adam betas must lie in [0, 1)");
  if (!(eps > 0.0))
    fail(ErrorKind::argument, "Adam epsilon must be positive");
}

AdamState AdamState::for_params(const ParamSet &params) {
  return {zeros_like(params), zeros_like(params), 0};
}

void adam_step(ParamSet &params, const ParamGrads &grads, AdamState &state,
               const AdamConfig &cfg) {
  if (grads.size() != params.size() || state.m.size() != params.size() ||
      state.v.size() != params.size())
    fail(ErrorKind::shape, "adam_step: " + std::to_string(params.size()) +
                               " parameters, " + std::to_string(grads.size()) +
                               " gradients, " + std::to_string(state.m.size()) +
                               " moment slots");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Tensor &p = params[i].value;
    if (!p.same_shape(grads[i]) || !p.same_shape(state.m[i]) ||
        !p.same_shape(state.v[i]))
      fail(ErrorKind::shape, "adam_step: shape mismatch for '" + params[i].name +
                                 "' " + p.shape_string() + " vs gradient " +
                                 grads[i].shape_string());
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor &p = params[i].value;
    Tensor &m = state.m[i];
    Tensor &v = state.v[i];
    const Tensor &g = grads[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g[j];
      v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g[j] * g[j];
      const double m_hat = m[j] / c1;
      const double v_hat = v[j] / c2;
      p[j] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
    }
  }
}

} // namespace mawgan::nn
