// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>

namespace mawgan {

using Mat3 = std::array<double, 9>; // row-major

/// M = U diag(sigma) V^T with sigma descending and U, V orthogonal.
/// Computed by one-sided Jacobi rotations on the columns of M, which keeps
/// small singular values accurate to working precision. When M is rank
/// deficient the missing columns of U are completed to an orthonormal basis.
struct Svd3 {
  Mat3 u{};
  std::array<double, 3> sigma{};
  Mat3 v{};
};

Svd3 svd3(const Mat3 &m);

/// Sum of singular values.
double nuclear_norm3(const Mat3 &m);

} // namespace mawgan
