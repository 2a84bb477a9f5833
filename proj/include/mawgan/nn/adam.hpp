// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

#include "mawgan/nn/param_set.hpp"

namespace mawgan::nn {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-7;
  void validate() const;
  friend bool operator==(const AdamConfig &, const AdamConfig &) = default;
};

/// First and second moment estimates aligned with a ParamSet.
struct AdamState {
  ParamGrads m;
  ParamGrads v;
  std::uint64_t step = 0;

  static AdamState for_params(const ParamSet &params);
  friend bool operator==(const AdamState &, const AdamState &) = default;
};

/// p -= lr * m_hat / (sqrt(v_hat) + eps) with bias-corrected moments.
/// Throws ErrorKind::shape when grads or state do not match params.
void adam_step(ParamSet &params, const ParamGrads &grads, AdamState &state,
               const AdamConfig &cfg);

} // namespace mawgan::nn
