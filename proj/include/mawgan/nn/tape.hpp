// SPDX-License-Identifier: Apache-2.0
//
// Reverse-mode differentiation over dense 2-D tensors.
//
// Every primitive records its output value and a closure that maps the
// output gradient onto its inputs. Node ids grow with recording order, so a
// single descending sweep is a reverse topological traversal. Higher-order
// gradients are not tracked by the engine; the gradient-penalty path builds
// its input gradient explicitly out of first-order primitives instead (see
// input_gradient in mlp.hpp).
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "mawgan/nn/param_set.hpp"
#include "mawgan/tensor.hpp"

namespace mawgan::nn {

class Tape;

/// Handle to a recorded value. Cheap to copy; only valid with its tape.
struct Var {
  Tape *tape = nullptr;
  std::uint32_t id = 0;

  const Tensor &value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
};

class Tape {
public:
  /// Receives the gradient flowing into the node and accumulates into its
  /// inputs through Tape::accumulate.
  using Backward = std::function<void(Tape &, const Tensor &)>;

  Tape() = default;
  Tape(const Tape &) = delete;
  Tape &operator=(const Tape &) = delete;

  Var constant(Tensor value);
  /// Leaf whose gradient is kept and can be read with gradient().
  Var variable(Tensor value);
  /// Leaf bound to slot `index` of `params`; collected by gradients().
  Var parameter(const ParamSet &params, std::size_t index);

  const Tensor &value(Var v) const { return nodes_[v.id].value; }
  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }
  std::size_t size() const noexcept { return nodes_.size(); }

  /// Records an op output. `backward` is skipped (not stored) when no
  /// parent requires a gradient.
  Var record(Tensor value, std::initializer_list<Var> parents,
             Backward backward);

  /// Reverse sweep from a 1x1 output. Throws ErrorKind::argument otherwise.
  void backward(Var output);

  /// Gradient of the last backward() output with respect to leaf `v`
  /// (variable or parameter); zeros for constants and when `v` did not influence
  /// the output. Interior gradients are released during the sweep.
  Tensor gradient(Var v) const;

  /// Gradients for every slot of `params`, summed over all parameter leaves
  /// bound to that set. Slots not on the tape get zeros.
  ParamGrads gradients(const ParamSet &params) const;

  /// Adds `g` into the pending gradient of `v` (used by Backward closures).
  void accumulate(Var v, const Tensor &g);
  /// Mutable gradient buffer of `v`, zero-initialized on first access.
  Tensor &grad_buffer(Var v);

  /// Number of nodes whose backward closure ran in the last sweep.
  std::size_t last_sweep_visits() const noexcept { return visits_; }

private:
  struct Node {
    Tensor value;
    bool requires_grad = false;
    Backward backward;
  };
  struct ParamLeaf {
    const ParamSet *set;
    std::size_t index;
    std::uint32_t node;
  };

  Var push(Tensor value, bool requires_grad, Backward backward);

  std::vector<Node> nodes_;
  std::vector<Tensor> grads_;
  std::vector<bool> has_grad_;
  std::vector<ParamLeaf> param_leaves_;
  std::size_t visits_ = 0;
};

} // namespace mawgan::nn
