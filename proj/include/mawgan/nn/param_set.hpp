// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "mawgan/tensor.hpp"

namespace mawgan::nn {

struct NamedTensor {
  std::string name;
  Tensor value;
  friend bool operator==(const NamedTensor &, const NamedTensor &) = default;
};

/// Ordered collection of uniquely named parameter tensors.
class ParamSet {
public:
  /// Returns the slot index. Throws on duplicate names.
  std::size_t add(std::string name, Tensor value);

  std::size_t size() const noexcept { return params_.size(); }
  std::size_t total_count() const noexcept;
  bool empty() const noexcept { return params_.empty(); }

  NamedTensor &operator[](std::size_t i) { return params_[i]; }
  const NamedTensor &operator[](std::size_t i) const { return params_[i]; }
  std::optional<std::size_t> find(const std::string &name) const;

  auto begin() noexcept { return params_.begin(); }
  auto end() noexcept { return params_.end(); }
  auto begin() const noexcept { return params_.begin(); }
  auto end() const noexcept { return params_.end(); }

  friend bool operator==(const ParamSet &, const ParamSet &) = default;

private:
  std::vector<NamedTensor> params_;
};

/// Gradients aligned slot-for-slot with a ParamSet.
using ParamGrads = std::vector<Tensor>;

ParamGrads zeros_like(const ParamSet &params);

} // namespace mawgan::nn
