// SPDX-License-Identifier: Apache-2.0
//
// Square-root velocity functions of sampled curves and the unit hypersphere
// they live on: distance, log/exp charts and the Karcher mean.
//
// Discretization: a curve with T samples on [0,1] has T-1 intervals of width
// dt = 1/(T-1). Velocities are forward differences, one per interval, and the
// inverse integrates with the matching left Riemann sum, so
// srvf_to_curve(curve_to_srvf(c), c[0]) reproduces c up to rounding.
#pragma once

#include <cstddef>
#include <span>
#include <utility>

#include "mawgan/tensor.hpp"

namespace mawgan {

class MotionSequence;

/// T x n samples of a curve on the uniform grid of [0,1].
struct Curve {
  Tensor samples;

  std::size_t points() const noexcept { return samples.rows(); }
  std::size_t dim() const noexcept { return samples.cols(); }
  double dt() const { return 1.0 / static_cast<double>(points() - 1); }
};

Curve to_curve(const MotionSequence &seq);

/// (T-1) x n square-root velocity samples, one per grid interval.
struct Srvf {
  Tensor samples;
  double dt = 0.0;
  bool unit = false;

  std::size_t intervals() const noexcept { return samples.rows(); }
  std::size_t dim() const noexcept { return samples.cols(); }
  std::size_t size() const noexcept { return samples.size(); }
};

/// Element of the tangent space at some reference SRVF; same layout and
/// quadrature weight as the SRVF it is tangent to.
struct TangentVector {
  Tensor samples;
  double dt = 0.0;
};

struct FrechetMean {
  Srvf mu;
  double residual = 0.0;
  std::size_t iterations = 0;
};

namespace sphere {
inline constexpr double kAntipodalEpsilon = 1e-6;
inline constexpr double kZeroEpsilon = 1e-12;
/// Allowed deviation of ||q|| from 1 for inputs declared to be on the sphere.
inline constexpr double kUnitTolerance = 1e-8;
} // namespace sphere

/// Discrete L2 inner product sum_i <a_i, b_i> dt.
double l2_inner(const Tensor &a, const Tensor &b, double dt);
double l2_norm(const Tensor &a, double dt);

Srvf curve_to_srvf(const Curve &c);
Curve srvf_to_curve(const Srvf &q, std::span<const double> start);

/// (q / ||q||, ||q||). Throws ErrorKind::degenerate for a zero SRVF.
std::pair<Srvf, double> to_unit(const Srvf &q);

/// Arc length acos(<q1,q2>) with the inner product clamped to [-1,1].
double geodesic_distance(const Srvf &q1, const Srvf &q2);

TangentVector log_map(const Srvf &mu, const Srvf &q);

/// Removes the component of `s` along `mu`; identity on tangent vectors.
TangentVector project_tangent(const Srvf &mu, const TangentVector &s);

/// cos(|s|) mu + sin(|s|) s/|s|, applied to the tangential part of s.
Srvf exp_map(const Srvf &mu, const TangentVector &s);

struct KarcherOptions {
  double tol = 1e-8;
  std::size_t max_iter = 100;
  double step = 1.0;
};

/// Gradient iteration mu <- exp_mu(step * mean_i log_mu(q_i)) from the
/// normalized extrinsic mean. Throws ConvergenceError when the budget runs
/// out and ErrorKind::singularity on an antipodal encounter.
FrechetMean karcher_mean(std::span<const Srvf> qs, const KarcherOptions &opts = {});

} // namespace mawgan
