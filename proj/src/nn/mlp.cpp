// SPDX-License-Identifier: Apache-2.0

#include "mawgan/nn/mlp.hpp"

#include <cmath>

#include "mawgan/nn/ops.hpp"
#include "mawgan/rng.hpp"
#include "mawgan/simd/kernels.hpp"

namespace mawgan::nn {

namespace {

std::string weight_name(std::size_t l) { return "layer" + std::to_string(l) + ".weight"; }
std::string bias_name(std::size_t l) { return "layer" + std::to_string(l) + ".bias"; }

Var activate(Var z, Activation a, double slope) {
  switch (a) {
  case Activation::identity:
    return z;
  case Activation::leaky_relu:
    return leaky_relu(z, slope);
  case Activation::tanh:
    return tanh(z);
  }
  return z;
}

double activate(double z, Activation a, double slope) {
  switch (a) {
  case Activation::identity:
    return z;
  case Activation::leaky_relu:
    return z > 0.0 ? z : slope * z;
  case Activation::tanh:
    return std::tanh(z);
  }
  return z;
}

// g * act'(z) for the layer with pre-activation z and output y.
Var through_activation(Tape &tape, Var g, Activation a, double slope, Var z, Var y) {
  switch (a) {
  case Activation::identity:
    return g;
  case Activation::leaky_relu: {
    // The mask is piecewise constant in the parameters.
    Tensor mask(z.rows(), z.cols());
    const Tensor &zv = z.value();
    for (std::size_t i = 0; i < mask.size(); ++i)
      mask[i] = zv[i] > 0.0 ? 1.0 : slope;
    return mul(g, tape.constant(std::move(mask)));
  }
  case Activation::tanh: {
    Var d = add_scalar(scale(square(y), -1.0), 1.0);
    return mul(g, d);
  }
  }
  return g;
}

} // namespace

std::string to_string(Activation a) {
  switch (a) {
  case Activation::identity:
    return "identity";
  case Activation::leaky_relu:
    return "leaky_relu";
  case Activation::tanh:
    return "tanh";
  }
  return "?";
}

Activation parse_activation(const std::string &name) {
  if (name == "identity")
    return Activation::identity;
  if (name == "leaky_relu")
    return Activation::leaky_relu;
  if (name == "tanh")
    return Activation::tanh;
  fail(ErrorKind::argument, "unknown activation '" + name +
                                "' (expected identity, leaky_relu or tanh)");
}

void MlpSpec::validate() const {
  if (widths.size() < 2)
    fail(ErrorKind::argument, "network needs an input and an output width");
  for (std::size_t w : widths)
    if (w == 0)
      fail(ErrorKind::argument, "network widths must be at least 1");
  if (!(slope >= 0.0) || !std::isfinite(slope))
    fail(ErrorKind::argument, "leaky-relu slope must be finite and nonnegative");
}

ParamSet init_params(const MlpSpec &spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  ParamSet params;
  for (std::size_t l = 0; l < spec.layers(); ++l) {
    const std::size_t in = spec.widths[l];
    const std::size_t out = spec.widths[l + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(in));
    Tensor w(out, in);
    for (double &v : w.values())
      v = rng.uniform(-limit, limit);
    params.add(weight_name(l), std::move(w));
    params.add(bias_name(l), Tensor(1, out));
  }
  return params;
}

void check_params(const MlpSpec &spec, const ParamSet &params) {
  spec.validate();
  if (params.size() != 2 * spec.layers())
    fail(ErrorKind::shape, "parameter set has " + std::to_string(params.size()) +
                               " tensors, network needs " +
                               std::to_string(2 * spec.layers()));
  for (std::size_t l = 0; l < spec.layers(); ++l) {
    const NamedTensor &w = params[2 * l];
    const NamedTensor &b = params[2 * l + 1];
    if (w.name != weight_name(l) || b.name != bias_name(l))
      fail(ErrorKind::shape, "unexpected parameter names '" + w.name + "', '" +
                                 b.name + "' for layer " + std::to_string(l));
    if (w.value.rows() != spec.widths[l + 1] || w.value.cols() != spec.widths[l] ||
        b.value.rows() != 1 || b.value.cols() != spec.widths[l + 1])
      fail(ErrorKind::shape, "layer " + std::to_string(l) + " parameters " +
                                 w.value.shape_string() + ", " +
                                 b.value.shape_string() + " do not match widths " +
                                 std::to_string(spec.widths[l]) + " -> " +
                                 std::to_string(spec.widths[l + 1]));
  }
}

MlpTrace forward(Tape &tape, const MlpSpec &spec, const ParamSet &params, Var x,
                 bool trainable) {
  check_params(spec, params);
  if (x.cols() != spec.input_width())
    fail(ErrorKind::shape, "network input " + x.value().shape_string() +
                               " does not match input width " +
                               std::to_string(spec.input_width()));
  MlpTrace trace;
  Var h = x;
  for (std::size_t l = 0; l < spec.layers(); ++l) {
    Var w = trainable ? tape.parameter(params, 2 * l) : tape.constant(params[2 * l].value);
    Var b = trainable ? tape.parameter(params, 2 * l + 1)
                      : tape.constant(params[2 * l + 1].value);
    Var z = affine(h, w, b);
    const bool last = l + 1 == spec.layers();
    h = activate(z, last ? spec.output : spec.hidden, spec.slope);
    trace.weights.push_back(w);
    trace.pre.push_back(z);
    trace.post.push_back(h);
  }
  trace.output = h;
  return trace;
}

Tensor evaluate(const MlpSpec &spec, const ParamSet &params, const Tensor &x) {
  check_params(spec, params);
  if (x.cols() != spec.input_width())
    fail(ErrorKind::shape, "network input " + x.shape_string() +
                               " does not match input width " +
                               std::to_string(spec.input_width()));
  Tensor h = x;
  for (std::size_t l = 0; l < spec.layers(); ++l) {
    const Tensor &w = params[2 * l].value;
    const Tensor &b = params[2 * l + 1].value;
    Tensor z(h.rows(), w.rows());
    simd::gemm_nt(h.rows(), w.cols(), w.rows(), h.data(), w.data(), z.data());
    const Activation a = l + 1 == spec.layers() ? spec.output : spec.hidden;
    for (std::size_t r = 0; r < z.rows(); ++r)
      for (std::size_t c = 0; c < z.cols(); ++c)
        z(r, c) = activate(z(r, c) + b[c], a, spec.slope);
    h = std::move(z);
  }
  return h;
}

Var input_gradient(Tape &tape, const MlpSpec &spec, const MlpTrace &trace) {
  if (spec.output_width() != 1)
    fail(ErrorKind::capability, "input_gradient needs a scalar-output network, got width " +
                                    std::to_string(spec.output_width()));
  if (trace.weights.size() != spec.layers())
    fail(ErrorKind::argument, "trace does not belong to this network");
  const std::size_t L = spec.layers();
  const std::size_t rows = trace.output.rows();
  Var g = tape.constant(Tensor(rows, 1, 1.0));
  for (std::size_t l = L; l-- > 0;) {
    const Activation a = l + 1 == L ? spec.output : spec.hidden;
    g = through_activation(tape, g, a, spec.slope, trace.pre[l], trace.post[l]);
    g = matmul(g, trace.weights[l]);
  }
  return g;
}

} // namespace mawgan::nn
