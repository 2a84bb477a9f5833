// SPDX-License-Identifier: Apache-2.0

#include "mawgan/svd3.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mawgan {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

double col_dot(const Mat3 &a, int p, int q) {
  return a[p] * a[q] + a[3 + p] * a[3 + q] + a[6 + p] * a[6 + q];
}

void rotate_cols(Mat3 &a, int p, int q, double c, double s) {
  for (int i = 0; i < 3; ++i) {
    const double ap = a[3 * i + p];
    const double aq = a[3 * i + q];
    a[3 * i + p] = c * ap - s * aq;
    a[3 * i + q] = s * ap + c * aq;
  }
}

// Fills column `col` of u with a unit vector orthogonal to the columns
// listed in `done`.
void complete_column(Mat3 &u, int col, const int *done, int ndone) {
  double best_norm = -1.0;
  std::array<double, 3> best{};
  for (int e = 0; e < 3; ++e) {
    std::array<double, 3> w{};
    w[e] = 1.0;
    for (int k = 0; k < ndone; ++k) {
      const int c = done[k];
      const double proj = u[c] * w[0] + u[3 + c] * w[1] + u[6 + c] * w[2];
      for (int i = 0; i < 3; ++i)
        w[i] -= proj * u[3 * i + c];
    }
    const double n = std::sqrt(w[0] * w[0] + w[1] * w[1] + w[2] * w[2]);
    if (n > best_norm) {
      best_norm = n;
      best = {w[0] / n, w[1] / n, w[2] / n};
    }
  }
  for (int i = 0; i < 3; ++i)
    u[3 * i + col] = best[i];
}

} // namespace

Svd3 svd3(const Mat3 &m) {
  Mat3 a = m;
  Mat3 v{1, 0, 0, 0, 1, 0, 0, 0, 1};
  constexpr int pairs[3][2] = {{0, 1}, {0, 2}, {1, 2}};
  for (int sweep = 0; sweep < 60; ++sweep) {
    bool rotated = false;
    for (const auto &pq : pairs) {
      const int p = pq[0], q = pq[1];
      const double alpha = col_dot(a, p, p);
      const double beta = col_dot(a, q, q);
      const double gamma = col_dot(a, p, q);
      if (gamma == 0.0 || std::abs(gamma) <= kEps * std::sqrt(alpha * beta))
        continue;
      rotated = true;
      const double zeta = (beta - alpha) / (2.0 * gamma);
      const double t = std::copysign(1.0, zeta) /
                       (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
      const double c = 1.0 / std::sqrt(1.0 + t * t);
      const double s = c * t;
      rotate_cols(a, p, q, c, s);
      rotate_cols(v, p, q, c, s);
    }
    if (!rotated)
      break;
  }

  std::array<double, 3> norms{};
  for (int j = 0; j < 3; ++j)
    norms[j] = std::sqrt(col_dot(a, j, j));
  std::array<int, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(),
                   [&](int x, int y) { return norms[x] > norms[y]; });

  Svd3 out;
  const double smax = norms[order[0]];
  int done[3];
  int ndone = 0;
  for (int k = 0; k < 3; ++k) {
    const int j = order[k];
    out.sigma[k] = norms[j];
    for (int i = 0; i < 3; ++i)
      out.v[3 * i + k] = v[3 * i + j];
    if (norms[j] > 0.0 && norms[j] > 64.0 * kEps * smax) {
      for (int i = 0; i < 3; ++i)
        out.u[3 * i + k] = a[3 * i + j] / norms[j];
      done[ndone++] = k;
    }
  }
  for (int k = 0; k < 3; ++k) {
    if (std::find(done, done + ndone, k) != done + ndone)
      continue;
    complete_column(out.u, k, done, ndone);
    done[ndone++] = k;
  }
  return out;
}

double nuclear_norm3(const Mat3 &m) {
  const Svd3 s = svd3(m);
  return s.sigma[0] + s.sigma[1] + s.sigma[2];
}

} // namespace mawgan
