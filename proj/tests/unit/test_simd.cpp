// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "mawgan/simd/kernels.hpp"
#include "mawgan/tensor.hpp"
#include "support.hpp"

using namespace mawgan;

namespace {

std::vector<double> random_vec(std::mt19937_64 &gen, std::size_t n) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::vector<double> v(n);
  for (double &x : v)
    x = u(gen);
  return v;
}

// Each available vector table against the scalar reference, across lengths
// that exercise the remainder loops.
void check_equivalent(const simd::KernelTable &vec) {
  const simd::KernelTable &ref = simd::scalar_table();
  std::mt19937_64 gen(11);
  for (std::size_t n : {0u, 1u, 2u, 3u, 4u, 5u, 7u, 8u, 9u, 15u, 16u, 17u, 31u, 64u, 1001u}) {
    const auto a = random_vec(gen, n), b = random_vec(gen, n);
    const double d_ref = ref.dot(a.data(), b.data(), n);
    const double d_vec = vec.dot(a.data(), b.data(), n);
    EXPECT_NEAR(d_vec, d_ref, 1e-12 * (1.0 + static_cast<double>(n))) << "n=" << n;

    auto y_ref = b, y_vec = b;
    ref.axpy(0.7, a.data(), y_ref.data(), n);
    vec.axpy(0.7, a.data(), y_vec.data(), n);
    // FMA rounds once where the scalar loop rounds twice.
    for (std::size_t i = 0; i < n; ++i)
      EXPECT_NEAR(y_ref[i], y_vec[i], 1e-15 * 8.0) << "axpy n=" << n;

    std::vector<double> m_ref(n), m_vec(n);
    ref.mul(a.data(), b.data(), m_ref.data(), n);
    vec.mul(a.data(), b.data(), m_vec.data(), n);
    EXPECT_EQ(m_ref, m_vec) << "mul n=" << n;

    auto s_ref = a, s_vec = a;
    ref.scale(-1.3, s_ref.data(), n);
    vec.scale(-1.3, s_vec.data(), n);
    EXPECT_EQ(s_ref, s_vec) << "scale n=" << n;
  }
}

} // namespace

TEST(Simd, ScalarTableIsAlwaysAvailable) {
  EXPECT_EQ(simd::scalar_table().isa, simd::Isa::scalar);
  EXPECT_TRUE(simd::select(simd::Isa::scalar));
  EXPECT_EQ(simd::active_isa(), simd::Isa::scalar);
}

TEST(Simd, Avx2MatchesScalar) {
  const simd::KernelTable *t = simd::avx2_table();
  if (!t)
    GTEST_SKIP() << "AVX2 not available on this machine";
  check_equivalent(*t);
}

TEST(Simd, NeonMatchesScalar) {
  const simd::KernelTable *t = simd::neon_table();
  if (!t)
    GTEST_SKIP() << "NEON not available on this machine";
  check_equivalent(*t);
}

TEST(Simd, DotAgainstLongDouble) {
  std::mt19937_64 gen(3);
  const auto a = random_vec(gen, 257), b = random_vec(gen, 257);
  long double want = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    want += static_cast<long double>(a[i]) * b[i];
  EXPECT_NEAR(simd::scalar_table().dot(a.data(), b.data(), a.size()), static_cast<double>(want),
              1e-12);
}

TEST(Simd, GemmVariantsMatchTripleLoop) {
  std::mt19937_64 gen(5);
  const std::size_t m = 7, k = 13, n = 5;
  const Tensor a = testing_support::random_tensor(gen, m, k);
  const Tensor b = testing_support::random_tensor(gen, k, n);
  const Tensor bt = testing_support::random_tensor(gen, n, k);
  const Tensor at = testing_support::random_tensor(gen, k, m);
  for (simd::Isa isa : {simd::Isa::scalar, simd::Isa::avx2, simd::Isa::neon}) {
    if (!simd::select(isa))
      continue;
    Tensor c1(m, n, 1.0), c2(m, n, 1.0), c3(m, n, 1.0);
    simd::gemm_nn(m, k, n, a.values().data(), b.values().data(), c1.values().data());
    simd::gemm_nt(m, k, n, a.values().data(), bt.values().data(), c2.values().data());
    simd::gemm_tn(m, k, n, at.values().data(), b.values().data(), c3.values().data());
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        double w1 = 1.0, w2 = 1.0, w3 = 1.0;
        for (std::size_t p = 0; p < k; ++p) {
          w1 += a(i, p) * b(p, j);
          w2 += a(i, p) * bt(j, p);
          w3 += at(p, i) * b(p, j);
        }
        EXPECT_NEAR(c1(i, j), w1, 1e-12) << to_string(isa);
        EXPECT_NEAR(c2(i, j), w2, 1e-12) << to_string(isa);
        EXPECT_NEAR(c3(i, j), w3, 1e-12) << to_string(isa);
      }
  }
  simd::select(simd::Isa::scalar);
}

TEST(Simd, UnavailableSelectionIsRejected) {
  const simd::Isa before = simd::active_isa();
  if (!simd::neon_table()) {
    EXPECT_FALSE(simd::select(simd::Isa::neon));
    EXPECT_EQ(simd::active_isa(), before);
  }
}

TEST(Tensor, ShapeChecks) {
  EXPECT_THROW(Tensor(2, 2, std::vector<double>{1, 2, 3}), Error);
  EXPECT_THROW(Tensor(2, 2).item(), Error);
  EXPECT_EQ(Tensor::scalar(4.0).item(), 4.0);
  Tensor t(1, 2, std::vector<double>{1.0, std::nan("")});
  EXPECT_FALSE(t.all_finite());
}
