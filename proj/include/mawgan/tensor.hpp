// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "mawgan/error.hpp"

namespace mawgan {

/// Dense row-major matrix of doubles. Vectors are 1xN or Nx1 tensors.
class Tensor {
public:
  Tensor() = default;
  Tensor(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}
  Tensor(std::size_t rows, std::size_t cols, std::vector<double> values)
      : rows_(rows), cols_(cols), values_(std::move(values)) {
    if (values_.size() != rows_ * cols_)
      fail(ErrorKind::shape, "tensor value count " +
                                 std::to_string(values_.size()) +
                                 " does not match shape " + shape_string());
  }

  static Tensor row(std::initializer_list<double> values) {
    return Tensor(1, values.size(), std::vector<double>(values));
  }
  static Tensor scalar(double v) { return Tensor(1, 1, v); }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return values_.size(); }
  std::vector<std::size_t> shape() const { return {rows_, cols_}; }
  std::string shape_string() const {
    return "[" + std::to_string(rows_) + "x" + std::to_string(cols_) + "]";
  }
  bool same_shape(const Tensor &o) const noexcept {
    return rows_ == o.rows_ && cols_ == o.cols_;
  }

  double &operator()(std::size_t r, std::size_t c) {
    return values_[r * cols_ + c];
  }
  double operator()(std::size_t r, std::size_t c) const {
    return values_[r * cols_ + c];
  }
  double &operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> row_span(std::size_t r) {
    return {values_.data() + r * cols_, cols_};
  }
  std::span<const double> row_span(std::size_t r) const {
    return {values_.data() + r * cols_, cols_};
  }
  double *data() noexcept { return values_.data(); }
  const double *data() const noexcept { return values_.data(); }

  double item() const {
    if (values_.size() != 1)
      fail(ErrorKind::shape, "item() on non-scalar tensor " + shape_string());
    return values_[0];
  }

  bool all_finite() const noexcept;

  friend bool operator==(const Tensor &, const Tensor &) = default;

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

} // namespace mawgan
