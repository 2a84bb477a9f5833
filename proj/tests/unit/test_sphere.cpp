// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "mawgan/sphere.hpp"
#include "support.hpp"

using namespace mawgan;
using testing_support::max_abs_diff;
using testing_support::random_tensor;
using testing_support::random_unit_srvf;

namespace {

Curve curve_1d(std::vector<double> v) {
  const std::size_t n = v.size();
  return Curve{Tensor(n, 1, std::move(v))};
}

// Unit point at geodesic distance d from mu along the unit tangent direction.
Srvf along(const Srvf &mu, const Tensor &dir, double d) {
  TangentVector s{dir, mu.dt};
  const double n = l2_norm(dir, mu.dt);
  for (double &v : s.samples.values())
    v *= d / n;
  return exp_map(mu, s);
}

Tensor random_tangent(std::mt19937_64 &gen, const Srvf &mu, double norm) {
  TangentVector t{random_tensor(gen, mu.intervals(), mu.dim()), mu.dt};
  t = project_tangent(mu, t);
  const double n = l2_norm(t.samples, mu.dt);
  for (double &v : t.samples.values())
    v *= norm / n;
  return t.samples;
}

} // namespace

TEST(Srvf, ConstantCurveIsZero) {
  const auto q = curve_to_srvf(Curve{Tensor(4, 3, 2.5)});
  EXPECT_EQ(q.intervals(), 3u);
  for (double v : q.samples.values())
    EXPECT_EQ(v, 0.0);
  const double start[] = {1.0, -2.0, 3.0};
  const Curve c = srvf_to_curve(Srvf{Tensor(3, 3), 1.0 / 3.0, false}, start);
  for (std::size_t t = 0; t < 4; ++t)
    EXPECT_EQ(c.samples(t, 1), -2.0);
}

TEST(Srvf, HandComputedLine) {
  const auto q = curve_to_srvf(curve_1d({0.0, 0.5, 1.0}));
  EXPECT_DOUBLE_EQ(q.dt, 0.5);
  EXPECT_DOUBLE_EQ(q.samples(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(q.samples(1, 0), 1.0);
  EXPECT_DOUBLE_EQ(l2_norm(q.samples, q.dt), 1.0);
  const double zero[] = {0.0};
  const Curve c = srvf_to_curve(q, zero);
  EXPECT_DOUBLE_EQ(c.samples(1, 0), 0.5);
  EXPECT_DOUBLE_EQ(c.samples(2, 0), 1.0);
}

TEST(Srvf, SquareCurveMatchesDifferenceOracle) {
  std::vector<double> v;
  for (int i = 0; i < 5; ++i)
    v.push_back((i / 4.0) * (i / 4.0));
  const auto q = curve_to_srvf(curve_1d(v));
  for (std::size_t i = 0; i < 4; ++i) {
    const double vel = (v[i + 1] - v[i]) * 4.0;
    EXPECT_NEAR(q.samples(i, 0), vel / std::sqrt(std::abs(vel)), 1e-15);
    // and close to the continuous sqrt(2t) at the interval midpoint
    EXPECT_NEAR(q.samples(i, 0), std::sqrt(2.0 * (i + 0.5) / 4.0), 0.05);
  }
}

TEST(Srvf, RoundTripRandomCurves) {
  std::mt19937_64 gen(7);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t T = 2 + gen() % 40, n = 3 * (1 + gen() % 6);
    const Curve c{random_tensor(gen, T, n, -3.0, 3.0)};
    const Curve back = srvf_to_curve(curve_to_srvf(c), c.samples.row_span(0));
    double scale = 0.0;
    for (double x : c.samples.values())
      scale = std::max(scale, std::abs(x));
    EXPECT_LE(max_abs_diff(back.samples, c.samples) / scale, 1e-12);
  }
}

TEST(Srvf, ToUnit) {
  std::mt19937_64 gen(8);
  const Srvf u = random_unit_srvf(gen, 5, 6);
  auto [same, s1] = to_unit(u);
  EXPECT_NEAR(s1, 1.0, 1e-15);
  EXPECT_LT(max_abs_diff(same.samples, u.samples), 1e-15);
  Srvf triple = u;
  for (double &v : triple.samples.values())
    v *= 3.0;
  auto [again, s3] = to_unit(triple);
  EXPECT_NEAR(s3, 3.0, 1e-14);
  EXPECT_LT(max_abs_diff(again.samples, u.samples), 1e-15);
  EXPECT_NEAR(l2_norm(again.samples, again.dt), 1.0, 1e-12);
  EXPECT_THROW(to_unit(Srvf{Tensor(3, 3), 0.25, false}), Error);
}

TEST(Sphere, GeodesicDistance) {
  // Two samples with dt = 1/2: unit norm means sum of squares = 2.
  const Srvf a{Tensor(2, 1, std::vector<double>{1.0, 1.0}), 0.5, true};
  const Srvf b{Tensor(2, 1, std::vector<double>{1.0, -1.0}), 0.5, true};
  EXPECT_NEAR(geodesic_distance(a, b), std::numbers::pi / 2, 1e-15);
  EXPECT_NEAR(geodesic_distance(a, a), 0.0, 1e-7);
  const double s = std::sqrt(3.0) / 2.0;
  const Srvf c{Tensor(2, 1, std::vector<double>{0.5 + s, 0.5 - s}), 0.5, true};
  EXPECT_NEAR(geodesic_distance(a, c), std::acos(0.5), 1e-12);
  EXPECT_NEAR(geodesic_distance(a, c), 1.0471975512, 1e-10);
}

TEST(Sphere, LogExpBasics) {
  std::mt19937_64 gen(9);
  const Srvf mu = random_unit_srvf(gen, 6, 3);
  const auto zero = log_map(mu, mu);
  EXPECT_LT(l2_norm(zero.samples, mu.dt), 1e-7);
  const Srvf back = exp_map(mu, TangentVector{Tensor(6, 3), mu.dt});
  EXPECT_EQ(back.samples, mu.samples);
  for (int i = 0; i < 100; ++i) {
    const Srvf q = random_unit_srvf(gen, 6, 3);
    const auto v = log_map(mu, q);
    EXPECT_NEAR(l2_norm(v.samples, mu.dt), geodesic_distance(mu, q), 1e-10);
    EXPECT_NEAR(l2_inner(v.samples, mu.samples, mu.dt), 0.0, 1e-12);
    EXPECT_LT(max_abs_diff(exp_map(mu, v).samples, q.samples), 1e-10);
    const Tensor s = random_tangent(gen, mu, 0.1 + 3.0 * (i / 100.0));
    const Srvf e = exp_map(mu, TangentVector{s, mu.dt});
    EXPECT_NEAR(l2_norm(e.samples, e.dt), 1.0, 1e-12);
    EXPECT_LT(max_abs_diff(log_map(mu, e).samples, s), 1e-9);
  }
}

TEST(Sphere, AntipodalLogIsSingular) {
  std::mt19937_64 gen(10);
  const Srvf mu = random_unit_srvf(gen, 4, 3);
  Srvf anti = mu;
  for (double &v : anti.samples.values())
    v = -v;
  try {
    log_map(mu, anti);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.kind(), ErrorKind::singularity);
  }
}

TEST(Sphere, ProjectTangentIsIdempotent) {
  std::mt19937_64 gen(11);
  const Srvf mu = random_unit_srvf(gen, 5, 3);
  const TangentVector raw{random_tensor(gen, 5, 3), mu.dt};
  const auto p = project_tangent(mu, raw);
  EXPECT_NEAR(l2_inner(p.samples, mu.samples, mu.dt), 0.0, 1e-14);
  EXPECT_LT(max_abs_diff(project_tangent(mu, p).samples, p.samples), 1e-15);
}

TEST(Karcher, IdenticalPointsAndMidpoint) {
  std::mt19937_64 gen(12);
  const Srvf q = random_unit_srvf(gen, 5, 3);
  const Srvf same[] = {q, q, q};
  const auto m = karcher_mean(same);
  EXPECT_LT(max_abs_diff(m.mu.samples, q.samples), 1e-12);

  const Srvf a = random_unit_srvf(gen, 5, 3), b = random_unit_srvf(gen, 5, 3);
  const Srvf pair[] = {a, b};
  const auto mid = karcher_mean(pair);
  const double d = geodesic_distance(a, b);
  EXPECT_NEAR(geodesic_distance(mid.mu, a), d / 2, 1e-8);
  EXPECT_NEAR(geodesic_distance(mid.mu, b), d / 2, 1e-8);
}

TEST(Karcher, SymmetricConfigurationRecoversCenter) {
  std::mt19937_64 gen(13);
  const Srvf c = random_unit_srvf(gen, 4, 3);
  const Tensor dir = random_tangent(gen, c, 1.0);
  Tensor neg = dir;
  for (double &v : neg.values())
    v = -v;
  const Srvf pts[] = {along(c, dir, 0.7), along(c, neg, 0.7)};
  const auto m = karcher_mean(pts);
  EXPECT_LT(geodesic_distance(m.mu, c), 1e-8);
}

TEST(Karcher, BudgetAndEmptyInput) {
  std::mt19937_64 gen(14);
  std::vector<Srvf> pts;
  for (int i = 0; i < 5; ++i)
    pts.push_back(random_unit_srvf(gen, 4, 3));
  try {
    karcher_mean(pts, {1e-300, 2, 1.0});
    FAIL();
  } catch (const ConvergenceError &e) {
    EXPECT_GT(e.residual(), 0.0);
  }
  EXPECT_THROW(karcher_mean(std::span<const Srvf>{}), Error);
}

TEST(Karcher, LocalMinimalityProbe) {
  std::mt19937_64 gen(15);
  std::vector<Srvf> pts;
  const Srvf c = random_unit_srvf(gen, 4, 3);
  for (int i = 0; i < 5; ++i)
    pts.push_back(along(c, random_tangent(gen, c, 1.0), 0.3 + 0.1 * i));
  const auto m = karcher_mean(pts, {1e-12, 1000, 1.0});
  auto objective = [&](const Srvf &mu) {
    double s = 0.0;
    for (const auto &q : pts)
      s += std::pow(geodesic_distance(mu, q), 2);
    return s;
  };
  const double best = objective(m.mu);
  for (int i = 0; i < 200; ++i) {
    const Srvf probe = along(m.mu, random_tangent(gen, m.mu, 1.0), 1e-3 * (1 + i % 10));
    EXPECT_LE(best, objective(probe) + 1e-12);
  }
}
