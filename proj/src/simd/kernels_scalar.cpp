// SPDX-License-Identifier: Apache-2.0
// Reference kernels. These define the semantics the vector variants are
// tested against.

#include "kernels_internal.hpp"

namespace mawgan::simd::detail {

double dot_scalar(const double *a, const double *b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    acc += a[i] * b[i];
  return acc;
}

void axpy_scalar(double alpha, const double *x, double *y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    y[i] += alpha * x[i];
}

void mul_scalar(const double *a, const double *b, double *out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    out[i] = a[i] * b[i];
}

void scale_scalar(double alpha, double *x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    x[i] *= alpha;
}

} // namespace mawgan::simd::detail
