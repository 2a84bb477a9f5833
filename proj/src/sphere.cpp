// SPDX-License-Identifier: Apache-2.0

#include "mawgan/sphere.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "mawgan/motion.hpp"
#include "mawgan/simd/kernels.hpp"

namespace mawgan {

namespace {

void require_finite(const Tensor &t, const char *what) {
  if (!t.all_finite())
    fail(ErrorKind::numeric, std::string(what) + " contains non-finite values");
}

void require_compatible(const Tensor &a, const Tensor &b, const char *op) {
  if (!a.same_shape(b))
    fail(ErrorKind::shape, std::string(op) + ": shapes " + a.shape_string() +
                               " and " + b.shape_string() + " differ");
}

void require_unit(const Srvf &q, const char *op) {
  const double n = l2_norm(q.samples, q.dt);
  if (!(std::abs(n - 1.0) <= sphere::kUnitTolerance))
    fail(ErrorKind::domain, std::string(op) + ": SRVF is not on the unit sphere "
                                              "(norm " +
                                std::to_string(n) + ")");
}

} // namespace

Curve to_curve(const MotionSequence &seq) { return Curve{seq.coords()}; }

double l2_inner(const Tensor &a, const Tensor &b, double dt) {
  return simd::dot(a.values(), b.values()) * dt;
}

double l2_norm(const Tensor &a, double dt) {
  return std::sqrt(l2_inner(a, a, dt));
}

Srvf curve_to_srvf(const Curve &c) {
  if (c.points() < 2)
    fail(ErrorKind::argument, "curve needs at least two samples");
  require_finite(c.samples, "curve");
  const std::size_t intervals = c.points() - 1;
  const std::size_t n = c.dim();
  const double dt = c.dt();
  Srvf q{Tensor(intervals, n), dt, false};
  std::vector<double> vel(n);
  for (std::size_t i = 0; i < intervals; ++i) {
    auto a = c.samples.row_span(i);
    auto b = c.samples.row_span(i + 1);
    double sq = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      vel[j] = (b[j] - a[j]) / dt;
      sq += vel[j] * vel[j];
    }
    const double speed = std::sqrt(sq);
    if (speed > 0.0) {
      const double inv = 1.0 / std::sqrt(speed);
      auto out = q.samples.row_span(i);
      for (std::size_t j = 0; j < n; ++j)
        out[j] = vel[j] * inv;
    }
  }
  return q;
}

Curve srvf_to_curve(const Srvf &q, std::span<const double> start) {
  if (start.size() != q.dim())
    fail(ErrorKind::shape, "start point has dimension " +
                               std::to_string(start.size()) + ", SRVF has " +
                               std::to_string(q.dim()));
  require_finite(q.samples, "SRVF");
  const std::size_t n = q.dim();
  Curve c{Tensor(q.intervals() + 1, n)};
  std::copy(start.begin(), start.end(), c.samples.row_span(0).begin());
  for (std::size_t i = 0; i < q.intervals(); ++i) {
    auto qi = q.samples.row_span(i);
    double sq = 0.0;
    for (double v : qi)
      sq += v * v;
    const double w = std::sqrt(sq) * q.dt;
    auto prev = c.samples.row_span(i);
    auto next = c.samples.row_span(i + 1);
    for (std::size_t j = 0; j < n; ++j)
      next[j] = prev[j] + w * qi[j];
  }
  return c;
}

std::pair<Srvf, double> to_unit(const Srvf &q) {
  const double norm = l2_norm(q.samples, q.dt);
  if (!(norm > 0.0))
    fail(ErrorKind::degenerate, "cannot scale a zero-motion SRVF to unit length");
  if (!std::isfinite(norm))
    fail(ErrorKind::numeric, "SRVF norm is not finite");
  Srvf out = q;
  simd::active().scale(1.0 / norm, out.samples.data(), out.samples.size());
  out.unit = true;
  return {std::move(out), norm};
}

double geodesic_distance(const Srvf &q1, const Srvf &q2) {
  require_compatible(q1.samples, q2.samples, "geodesic_distance");
  require_unit(q1, "geodesic_distance");
  require_unit(q2, "geodesic_distance");
  const double c = std::clamp(l2_inner(q1.samples, q2.samples, q1.dt), -1.0, 1.0);
  return std::acos(c);
}

TangentVector log_map(const Srvf &mu, const Srvf &q) {
  require_compatible(mu.samples, q.samples, "log_map");
  require_unit(mu, "log_map");
  require_unit(q, "log_map");
  const double dt = mu.dt;
  const double c = std::clamp(l2_inner(q.samples, mu.samples, dt), -1.0, 1.0);
  // The perpendicular part w = q - c*mu has norm sin(d). Taking d from
  // atan2(|w|, c) rather than acos(c) keeps full precision for nearby
  // points, where acos loses half the digits; rescaling w to length d by its
  // computed norm likewise avoids dividing by a tiny sin(d).
  TangentVector v{Tensor(q.samples.rows(), q.samples.cols()), dt};
  auto out = v.samples.values();
  auto qv = q.samples.values();
  auto mv = mu.samples.values();
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = qv[i] - c * mv[i];
  const double wn = l2_norm(v.samples, dt);
  const double d = std::atan2(wn, c);
  if (d < sphere::kZeroEpsilon || !(wn > 0.0))
    return TangentVector{Tensor(q.samples.rows(), q.samples.cols()), dt};
  if (d > std::numbers::pi - sphere::kAntipodalEpsilon)
    fail(ErrorKind::singularity,
         "log map undefined: points are antipodal (distance " +
             std::to_string(d) + ")");
  simd::active().scale(d / wn, v.samples.data(), v.samples.size());
  return v;
}

TangentVector project_tangent(const Srvf &mu, const TangentVector &s) {
  require_compatible(mu.samples, s.samples, "project_tangent");
  const double c = l2_inner(s.samples, mu.samples, mu.dt);
  TangentVector out = s;
  simd::axpy(-c, mu.samples.values(), out.samples.values());
  return out;
}

Srvf exp_map(const Srvf &mu, const TangentVector &s) {
  require_compatible(mu.samples, s.samples, "exp_map");
  require_finite(s.samples, "tangent vector");
  const TangentVector t = project_tangent(mu, s);
  const double n = l2_norm(t.samples, mu.dt);
  Srvf out{mu.samples, mu.dt, true};
  if (n < sphere::kZeroEpsilon)
    return out;
  simd::active().scale(std::cos(n), out.samples.data(), out.samples.size());
  simd::axpy(std::sin(n) / n, t.samples.values(), out.samples.values());
  return out;
}

FrechetMean karcher_mean(std::span<const Srvf> qs, const KarcherOptions &opts) {
  if (qs.empty())
    fail(ErrorKind::argument, "Karcher mean of an empty set");
  if (!(opts.step > 0.0) || !(opts.tol > 0.0))
    fail(ErrorKind::argument, "Karcher step and tolerance must be positive");
  const Srvf &first = qs.front();
  Srvf sum{Tensor(first.samples.rows(), first.samples.cols()), first.dt, false};
  for (const Srvf &q : qs) {
    require_compatible(first.samples, q.samples, "karcher_mean");
    require_unit(q, "karcher_mean");
    simd::axpy(1.0, q.samples.values(), sum.samples.values());
  }
  FrechetMean result;
  result.mu = to_unit(sum).first;

  const double inv_m = 1.0 / static_cast<double>(qs.size());
  TangentVector grad{Tensor(first.samples.rows(), first.samples.cols()), first.dt};
  for (std::size_t iter = 0;; ++iter) {
    std::fill(grad.samples.values().begin(), grad.samples.values().end(), 0.0);
    for (std::size_t i = 0; i < qs.size(); ++i) {
      TangentVector v;
      try {
        v = log_map(result.mu, qs[i]);
      } catch (const Error &e) {
        if (e.kind() == ErrorKind::singularity)
          fail(ErrorKind::singularity, "Karcher mean: point " +
                                           std::to_string(i) +
                                           " is antipodal to the estimate");
        throw;
      }
      simd::axpy(inv_m, v.samples.values(), grad.samples.values());
    }
    result.residual = l2_norm(grad.samples, grad.dt);
    result.iterations = iter;
    if (result.residual <= opts.tol)
      return result;
    if (iter == opts.max_iter)
      throw ConvergenceError("Karcher mean did not converge in " +
                                 std::to_string(opts.max_iter) +
                                 " iterations (residual " +
                                 std::to_string(result.residual) + ")",
                             result.residual);
    simd::active().scale(opts.step, grad.samples.data(), grad.samples.size());
    result.mu = exp_map(result.mu, grad);
    // Re-normalize to stop drift off the sphere accumulating over iterations.
    result.mu = to_unit(result.mu).first;
  }
}

} // namespace mawgan
