// SPDX-License-Identifier: Apache-2.0
//
// Dense networks: affine layers with a pointwise activation between them.
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "mawgan/nn/param_set.hpp"
#include "mawgan/nn/tape.hpp"

namespace mawgan::nn {

enum class Activation { identity, leaky_relu, tanh };

std::string to_string(Activation a);
/// Throws ErrorKind::argument for an unknown name.
Activation parse_activation(const std::string &name);

struct MlpSpec {
  /// Input width, hidden widths..., output width. At least two entries.
  std::vector<std::size_t> widths;
  Activation hidden = Activation::leaky_relu;
  double slope = 0.2; ///< leaky-relu negative slope
  Activation output = Activation::identity;

  std::size_t layers() const noexcept {
    return widths.empty() ? 0 : widths.size() - 1;
  }
  std::size_t input_width() const { return widths.front(); }
  std::size_t output_width() const { return widths.back(); }
  /// Throws ErrorKind::argument.
  void validate() const;

  friend bool operator==(const MlpSpec &, const MlpSpec &) = default;
};

/// Parameters "layer<i>.weight" (out x in) and "layer<i>.bias" (1 x out).
/// Weights are uniform in +-sqrt(6 / fan_in), biases start at zero.
ParamSet init_params(const MlpSpec &spec, std::uint64_t seed);

/// Throws ErrorKind::shape if `params` does not have the layout of `spec`.
void check_params(const MlpSpec &spec, const ParamSet &params);

/// Everything input_gradient needs to walk the network backwards.
struct MlpTrace {
  Var output;
  std::vector<Var> weights; ///< per layer
  std::vector<Var> pre;     ///< affine outputs z_l
  std::vector<Var> post;    ///< activation outputs
};

/// Records the network on `tape`. With trainable = false the parameters
/// enter as constants (no parameter gradients, input gradients still flow).
MlpTrace forward(Tape &tape, const MlpSpec &spec, const ParamSet &params,
                 Var x, bool trainable = true);

/// Plain evaluation without a tape.
Tensor evaluate(const MlpSpec &spec, const ParamSet &params, const Tensor &x);

/// Row r of the result is the gradient of output r with respect to input
/// row r, recorded from first-order primitives so that parameter gradients
/// of any function of it are exact. Requires a scalar-output network;
/// throws ErrorKind::capability otherwise.
Var input_gradient(Tape &tape, const MlpSpec &spec, const MlpTrace &trace);

} // namespace mawgan::nn
