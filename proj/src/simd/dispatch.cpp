// SPDX-License-Identifier: Apache-2.0

#include <atomic>
#include <cstdlib>
#include <string_view>

#include "kernels_internal.hpp"
#include "mawgan/simd/kernels.hpp"

namespace mawgan::simd {

std::string_view to_string(Isa isa) noexcept {
  switch (isa) {
  case Isa::scalar:
    return "scalar";
  case Isa::avx2:
    return "avx2";
  case Isa::neon:
    return "neon";
  }
  return "unknown";
}

const KernelTable &scalar_table() noexcept {
  static const KernelTable table{Isa::scalar, detail::dot_scalar,
                                 detail::axpy_scalar, detail::mul_scalar,
                                 detail::scale_scalar};
  return table;
}

const KernelTable *avx2_table() noexcept {
#if MAWGAN_SIMD_X86
  static const bool supported = [] {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  }();
  static const KernelTable table{Isa::avx2, detail::dot_avx2, detail::axpy_avx2,
                                 detail::mul_avx2, detail::scale_avx2};
  return supported ? &table : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable *neon_table() noexcept {
#if MAWGAN_SIMD_NEON
  static const KernelTable table{Isa::neon, detail::dot_neon, detail::axpy_neon,
                                 detail::mul_neon, detail::scale_neon};
  return &table;
#else
  return nullptr;
#endif
}

namespace {

const KernelTable *table_for(Isa isa) noexcept {
  switch (isa) {
  case Isa::scalar:
    return &scalar_table();
  case Isa::avx2:
    return avx2_table();
  case Isa::neon:
    return neon_table();
  }
  return nullptr;
}

const KernelTable *probe() noexcept {
  if (const char *env = std::getenv("MAWGAN_SIMD")) {
    std::string_view want(env);
    if (want == "scalar")
      return &scalar_table();
    if (want == "avx2" && avx2_table())
      return avx2_table();
    if (want == "neon" && neon_table())
      return neon_table();
    if (want != "auto" && !want.empty())
      return &scalar_table();
  }
  if (auto *t = avx2_table())
    return t;
  if (auto *t = neon_table())
    return t;
  return &scalar_table();
}

std::atomic<const KernelTable *> &slot() noexcept {
  static std::atomic<const KernelTable *> current{probe()};
  return current;
}

} // namespace

const KernelTable &active() noexcept {
  return *slot().load(std::memory_order_relaxed);
}

Isa active_isa() noexcept { return active().isa; }

bool select(Isa isa) noexcept {
  const KernelTable *t = table_for(isa);
  if (!t)
    return false;
  slot().store(t, std::memory_order_relaxed);
  return true;
}

void gemm_nn(std::size_t m, std::size_t k, std::size_t n, const double *a,
             const double *b, double *c) {
  const KernelTable &kt = active();
  for (std::size_t i = 0; i < m; ++i) {
    double *crow = c + i * n;
    const double *arow = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      kt.axpy(arow[p], b + p * n, crow, n);
    }
  }
}

void gemm_nt(std::size_t m, std::size_t k, std::size_t n, const double *a,
             const double *b, double *c) {
  const KernelTable &kt = active();
  for (std::size_t i = 0; i < m; ++i) {
    const double *arow = a + i * k;
    double *crow = c + i * n;
    for (std::size_t j = 0; j < n; ++j)
      crow[j] += kt.dot(arow, b + j * k, k);
  }
}

void gemm_tn(std::size_t m, std::size_t k, std::size_t n, const double *a,
             const double *b, double *c) {
  const KernelTable &kt = active();
  for (std::size_t p = 0; p < k; ++p) {
    const double *arow = a + p * m;
    const double *brow = b + p * n;
    for (std::size_t i = 0; i < m; ++i)
      kt.axpy(arow[i], brow, c + i * n, n);
  }
}

} // namespace mawgan::simd
