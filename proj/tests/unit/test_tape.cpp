// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "mawgan/nn/ops.hpp"
#include "support.hpp"

using namespace mawgan;
using namespace mawgan::nn;
using testing_support::numeric_gradient;
using testing_support::random_tensor;
using testing_support::relative_error;

namespace {

using Build = std::function<Var(Tape &, const std::vector<Var> &)>;

// Reduces any output to a scalar with fixed random weights so that every
// output entry contributes a distinct cotangent.
double weighted(Tape &t, Var out, const Tensor &w, Var *scalar) {
  Var s = nn::sum(nn::mul(out, t.constant(w)));
  if (scalar)
    *scalar = s;
  return s.value().item();
}

// Analytic gradients of every input against central differences.
double worst_error(const Build &f, const std::vector<Tensor> &inputs, double h = 1e-6) {
  Tensor weights;
  {
    Tape probe;
    std::vector<Var> in;
    for (const auto &x : inputs)
      in.push_back(probe.constant(x));
    const Tensor &out = f(probe, in).value();
    std::mt19937_64 gen(99);
    weights = random_tensor(gen, out.rows(), out.cols(), 0.5, 1.5);
  }
  Tape tape;
  std::vector<Var> vars;
  for (const auto &x : inputs)
    vars.push_back(tape.variable(x));
  Var s;
  weighted(tape, f(tape, vars), weights, &s);
  tape.backward(s);
  double worst = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    auto eval = [&](const Tensor &xi) {
      Tape t;
      std::vector<Var> in;
      for (std::size_t j = 0; j < inputs.size(); ++j)
        in.push_back(t.constant(j == i ? xi : inputs[j]));
      return weighted(t, f(t, in), weights, nullptr);
    };
    const Tensor num = numeric_gradient(eval, inputs[i], h);
    worst = std::max(worst, relative_error(tape.gradient(vars[i]), num));
  }
  return worst;
}

struct TapeFd : ::testing::Test {
  std::mt19937_64 gen{2024};
  Tensor rnd(std::size_t r, std::size_t c, double lo = -1.0, double hi = 1.0) {
    return random_tensor(gen, r, c, lo, hi);
  }
};

constexpr double kPrimitiveTol = 1e-4;

} // namespace

TEST(Tape, SquareAtThreeHasGradientSix) {
  Tape t;
  Var w = t.variable(Tensor::scalar(3.0));
  Var y = nn::square(w);
  t.backward(y);
  EXPECT_DOUBLE_EQ(t.gradient(w).item(), 6.0);
}

TEST(Tape, ConstantOutputHasZeroGradient) {
  Tape t;
  Var w = t.variable(Tensor::scalar(3.0));
  Var c = t.constant(Tensor::scalar(5.0));
  Var y = nn::add(c, nn::scale(w, 0.0));
  t.backward(y);
  EXPECT_EQ(t.gradient(w).item(), 0.0);
  EXPECT_EQ(t.gradient(c).item(), 0.0); // constants are not tracked
}

TEST(Tape, SharedSubexpressionAccumulates) {
  Tape t;
  Var x = t.variable(Tensor::scalar(2.0));
  Var y = nn::mul(x, x); // x used twice
  Var z = nn::add(y, x);
  t.backward(z);
  EXPECT_DOUBLE_EQ(t.gradient(x).item(), 5.0);
}

TEST(Tape, BackwardNeedsScalar) {
  Tape t;
  Var x = t.variable(Tensor(2, 2, 1.0));
  EXPECT_THROW(t.backward(x), Error);
}

TEST(Tape, ConstantsSkipBackward) {
  Tape t;
  Var a = t.constant(Tensor(3, 3, 1.0));
  Var b = nn::tanh(nn::square(a));
  Var x = t.variable(Tensor::scalar(1.0));
  Var y = nn::add(nn::sum(b), x);
  t.backward(y);
  EXPECT_EQ(t.last_sweep_visits(), 1u); // only the final add
}

TEST(Tape, ParameterGradientsSumOverLeaves) {
  ParamSet p;
  p.add("w", Tensor::scalar(2.0));
  Tape t;
  Var a = t.parameter(p, 0), b = t.parameter(p, 0);
  Var y = nn::mul(a, b);
  t.backward(y);
  const auto g = t.gradients(p);
  ASSERT_EQ(g.size(), 1u);
  EXPECT_DOUBLE_EQ(g[0].item(), 4.0);
}

TEST_F(TapeFd, LinearAlgebra) {
  EXPECT_LT(worst_error([](Tape &, auto &v) { return matmul(v[0], v[1]); }, {rnd(3, 4), rnd(4, 2)}),
            kPrimitiveTol);
  EXPECT_LT(worst_error([](Tape &, auto &v) { return matmul_nt(v[0], v[1]); }, {rnd(3, 4), rnd(5, 4)}),
            kPrimitiveTol);
  EXPECT_LT(worst_error([](Tape &, auto &v) { return affine(v[0], v[1], v[2]); },
                        {rnd(3, 4), rnd(2, 4), rnd(1, 2)}),
            kPrimitiveTol);
}

TEST_F(TapeFd, Elementwise) {
  const Tensor a = rnd(3, 4), b = rnd(3, 4), pos = rnd(3, 4, 0.5, 2.0);
  EXPECT_LT(worst_error([](Tape &, auto &v) { return add(v[0], v[1]); }, {a, b}), kPrimitiveTol);
  EXPECT_LT(worst_error([](Tape &, auto &v) { return sub(v[0], v[1]); }, {a, b}), kPrimitiveTol);
  EXPECT_LT(worst_error([](Tape &, auto &v) { return mul(v[0], v[1]); }, {a, b}), kPrimitiveTol);
  EXPECT_LT(worst_error([](Tape &, auto &v) { return div(v[0], v[1]); }, {a, pos}), kPrimitiveTol);
  EXPECT_LT(worst_error([](Tape &, auto &v) { return scale(v[0], -2.5); }, {a}), kPrimitiveTol);
  EXPECT_LT(worst_error([](Tape &, auto &v) { return add_scalar(v[0], 4.0); }, {a}), kPrimitiveTol);
  EXPECT_LT(worst_error([](Tape &, auto &v) { return add_rowvec(v[0], v[1]); }, {a, rnd(1, 4)}),
            kPrimitiveTol);
  EXPECT_LT(worst_error([](Tape &, auto &v) { return mul_colvec(v[0], v[1]); }, {a, rnd(3, 1)}),
            kPrimitiveTol);
}

TEST_F(TapeFd, PointwiseFunctions) {
  // Keep away from the kinks of leaky_relu and abs.
  Tensor a = rnd(4, 5);
  for (double &x : a.values())
    if (std::abs(x) < 0.05)
      x += 0.1;
  EXPECT_LT(worst_error([](Tape &, auto &v) { return leaky_relu(v[0], 0.2); }, {a}), kPrimitiveTol);
  EXPECT_LT(worst_error([](Tape &, auto &v) { return nn::tanh(v[0]); }, {a}), kPrimitiveTol);
  EXPECT_LT(worst_error([](Tape &, auto &v) { return square(v[0]); }, {a}), kPrimitiveTol);
  EXPECT_LT(worst_error([](Tape &, auto &v) { return nn::abs(v[0]); }, {a}), kPrimitiveTol);
  EXPECT_LT(worst_error([](Tape &, auto &v) { return nn::sin(v[0]); }, {a}), kPrimitiveTol);
  EXPECT_LT(worst_error([](Tape &, auto &v) { return nn::cos(v[0]); }, {a}), kPrimitiveTol);
  EXPECT_LT(worst_error([](Tape &, auto &v) { return nn::sqrt(v[0]); }, {rnd(3, 3, 0.2, 2.0)}),
            kPrimitiveTol);
  EXPECT_LT(worst_error([](Tape &, auto &v) { return acos_clamped(v[0]); }, {rnd(3, 3, -0.9, 0.9)}),
            kPrimitiveTol);
}

TEST_F(TapeFd, SincAcrossSeriesBranch) {
  Tensor x(1, 8, std::vector<double>{-3.0, -1.0, -1e-3, -2e-5, 0.0, 3e-5, 0.4, 2.9});
  EXPECT_LT(worst_error([](Tape &, auto &v) { return sinc(v[0]); }, {x}, 1e-7), kPrimitiveTol);
  Tape t;
  Var s = sinc(t.constant(x));
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = x.values()[i];
    const double want = xi == 0.0 ? 1.0 : std::sin(xi) / xi;
    EXPECT_NEAR(s.value().values()[i], want, 2e-16);
  }
}

TEST_F(TapeFd, ClampedAcosHasZeroSlopeOutside) {
  Tape t;
  Var x = t.variable(Tensor(1, 2, std::vector<double>{1.0, -1.0}));
  Var y = nn::sum(acos_clamped(x));
  t.backward(y);
  EXPECT_EQ(t.gradient(x)(0, 0), 0.0);
  EXPECT_EQ(t.gradient(x)(0, 1), 0.0);
  EXPECT_TRUE(y.value().all_finite());
}

TEST_F(TapeFd, Reductions) {
  const Tensor a = rnd(3, 6);
  EXPECT_LT(worst_error([](Tape &, auto &v) { return nn::sum(v[0]); }, {a}), kPrimitiveTol);
  EXPECT_LT(worst_error([](Tape &, auto &v) { return mean(v[0]); }, {a}), kPrimitiveTol);
  EXPECT_LT(worst_error([](Tape &, auto &v) { return row_sum(v[0]); }, {a}), kPrimitiveTol);
  EXPECT_LT(worst_error([](Tape &, auto &v) { return row_norm(v[0]); }, {a}), kPrimitiveTol);
}

TEST_F(TapeFd, BlockOps) {
  const Tensor a = rnd(2, 12);
  EXPECT_LT(worst_error([](Tape &, auto &v) { return block_sum(v[0], 3); }, {a}), kPrimitiveTol);
  EXPECT_LT(worst_error([](Tape &, auto &v) { return block_norm(v[0], 3); }, {a}), kPrimitiveTol);
  EXPECT_LT(worst_error([](Tape &, auto &v) { return block_scale(v[0], v[1], 3); }, {a, rnd(2, 4)}),
            kPrimitiveTol);
  EXPECT_LT(worst_error([](Tape &, auto &v) { return cumsum_blocks(v[0], 3); }, {a}), kPrimitiveTol);
  EXPECT_LT(worst_error([](Tape &, auto &v) { return add_block_broadcast(v[0], v[1], 3); },
                        {a, rnd(2, 3)}),
            kPrimitiveTol);
}

TEST_F(TapeFd, BlockOpValues) {
  Tape t;
  Var a = t.constant(Tensor(1, 6, std::vector<double>{1, 2, 3, 4, 5, 6}));
  EXPECT_EQ(cumsum_blocks(a, 2).value(), Tensor(1, 6, std::vector<double>{1, 2, 4, 6, 9, 12}));
  EXPECT_EQ(block_sum(a, 3).value(), Tensor(1, 2, std::vector<double>{6, 15}));
  Var s = t.constant(Tensor(1, 2, std::vector<double>{10, 20}));
  EXPECT_EQ(add_block_broadcast(a, s, 2).value(),
            Tensor(1, 6, std::vector<double>{11, 22, 13, 24, 15, 26}));
}

TEST_F(TapeFd, PoseOps) {
  const std::size_t k = 4, frames = 2;
  const Tensor a = rnd(2, 3 * k * frames), b = rnd(2, 3 * k * frames);
  EXPECT_LT(worst_error([&](Tape &, auto &v) { return pose_cross(v[0], v[1], k); }, {a, b}),
            kPrimitiveTol);
  const Bone bones[] = {{0, 1}, {1, 2}, {1, 3}};
  EXPECT_LT(worst_error([&](Tape &, auto &v) { return bone_vectors(v[0], bones, k); }, {a}),
            kPrimitiveTol);
  // Well separated singular values keep the nuclear norm smooth.
  EXPECT_LT(worst_error([](Tape &, auto &v) { return nuclear_norm3x3(v[0]); }, {rnd(2, 18)}),
            kPrimitiveTol);
  EXPECT_LT(worst_error([&](Tape &, auto &v) { return nuclear_norm3x3(pose_cross(v[0], v[1], k)); },
                        {a, b}),
            kPrimitiveTol);
}

TEST_F(TapeFd, PoseCrossValue) {
  Tape t;
  // One frame, two joints: A = [[1,2,3],[4,5,6]], B = [[1,0,0],[0,1,0]].
  Var a = t.constant(Tensor(1, 6, std::vector<double>{1, 2, 3, 4, 5, 6}));
  Var b = t.constant(Tensor(1, 6, std::vector<double>{1, 0, 0, 0, 1, 0}));
  const Tensor m = pose_cross(a, b, 2).value();
  // A^T B
  EXPECT_EQ(m, Tensor(1, 9, std::vector<double>{1, 4, 0, 2, 5, 0, 3, 6, 0}));
}

TEST_F(TapeFd, ShapeErrors) {
  Tape t;
  Var a = t.constant(Tensor(2, 3)), b = t.constant(Tensor(3, 2));
  EXPECT_THROW(add(a, b), Error);
  EXPECT_THROW(matmul_nt(a, b), Error);
  EXPECT_THROW(block_sum(a, 2), Error);
  EXPECT_THROW(mul_colvec(a, t.constant(Tensor(3, 1))), Error);
}
