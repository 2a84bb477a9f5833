// SPDX-License-Identifier: Apache-2.0

#include "mawgan/nn/tape.hpp"

#include <algorithm>
#include <string>

#include "mawgan/simd/kernels.hpp"

namespace mawgan::nn {

const Tensor &Var::value() const { return tape->value(*this); }

std::size_t ParamSet::add(std::string name, Tensor value) {
  if (find(name))
    fail(ErrorKind::argument, "duplicate parameter name '" + name + "'");
  params_.push_back({std::move(name), std::move(value)});
  return params_.size() - 1;
}

std::size_t ParamSet::total_count() const noexcept {
  std::size_t n = 0;
  for (const auto &p : params_)
    n += p.value.size();
  return n;
}

std::optional<std::size_t> ParamSet::find(const std::string &name) const {
  for (std::size_t i = 0; i < params_.size(); ++i)
    if (params_[i].name == name)
      return i;
  return std::nullopt;
}

ParamGrads zeros_like(const ParamSet &params) {
  ParamGrads g;
  g.reserve(params.size());
  for (const auto &p : params)
    g.emplace_back(p.value.rows(), p.value.cols());
  return g;
}

Var Tape::push(Tensor value, bool requires_grad, Backward backward) {
  nodes_.push_back({std::move(value), requires_grad, std::move(backward)});
  return Var{this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Tape::constant(Tensor value) { return push(std::move(value), false, {}); }

Var Tape::variable(Tensor value) { return push(std::move(value), true, {}); }

Var Tape::parameter(const ParamSet &params, std::size_t index) {
  Var v = push(params[index].value, true, {});
  param_leaves_.push_back({&params, index, v.id});
  return v;
}

Var Tape::record(Tensor value, std::initializer_list<Var> parents,
                 Backward backward) {
  bool needs = false;
  for (Var p : parents) {
    if (p.tape != this)
      fail(ErrorKind::argument, "operand recorded on a different tape");
    needs = needs || nodes_[p.id].requires_grad;
  }
  return push(std::move(value), needs, needs ? std::move(backward) : Backward{});
}

void Tape::backward(Var output) {
  if (output.tape != this)
    fail(ErrorKind::argument, "backward() on a variable from another tape");
  const Tensor &out = nodes_[output.id].value;
  if (out.size() != 1)
    fail(ErrorKind::argument, "backward() needs a scalar output, got " +
                                  out.shape_string());
  grads_.assign(nodes_.size(), Tensor());
  has_grad_.assign(nodes_.size(), false);
  visits_ = 0;
  grads_[output.id] = Tensor(1, 1, 1.0);
  has_grad_[output.id] = true;
  for (std::size_t id = output.id + 1; id-- > 0;) {
    Node &node = nodes_[id];
    if (!has_grad_[id] || !node.requires_grad || !node.backward)
      continue;
    ++visits_;
    // Interior gradients are consumed here; only leaves keep theirs.
    const Tensor g = std::move(grads_[id]);
    has_grad_[id] = false;
    node.backward(*this, g);
  }
}

Tensor &Tape::grad_buffer(Var v) {
  if (!has_grad_[v.id]) {
    const Tensor &val = nodes_[v.id].value;
    grads_[v.id] = Tensor(val.rows(), val.cols());
    has_grad_[v.id] = true;
  }
  return grads_[v.id];
}

void Tape::accumulate(Var v, const Tensor &g) {
  if (!nodes_[v.id].requires_grad)
    return;
  Tensor &buf = grad_buffer(v);
  if (!buf.same_shape(g))
    fail(ErrorKind::shape, "gradient shape " + g.shape_string() +
                               " does not match value " + buf.shape_string());
  simd::active().axpy(1.0, g.data(), buf.data(), g.size());
}

Tensor Tape::gradient(Var v) const {
  if (v.id < has_grad_.size() && has_grad_[v.id])
    return grads_[v.id];
  const Tensor &val = nodes_[v.id].value;
  return Tensor(val.rows(), val.cols());
}

ParamGrads Tape::gradients(const ParamSet &params) const {
  ParamGrads out = zeros_like(params);
  for (const ParamLeaf &leaf : param_leaves_) {
    if (leaf.set != &params || leaf.node >= has_grad_.size() ||
        !has_grad_[leaf.node])
      continue;
    const Tensor &g = grads_[leaf.node];
    simd::active().axpy(1.0, g.data(), out[leaf.index].data(), g.size());
  }
  return out;
}

} // namespace mawgan::nn
