// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <string_view>

namespace mawgan::simd {

enum class Isa { scalar, avx2, neon };

std::string_view to_string(Isa isa) noexcept;

/// Inner-loop kernels. Every variant computes the same quantity; only the
/// floating-point summation order differs between variants.
struct KernelTable {
  Isa isa;
  double (*dot)(const double *a, const double *b, std::size_t n);
  /// y += alpha * x
  void (*axpy)(double alpha, const double *x, double *y, std::size_t n);
  /// out = a * b (elementwise)
  void (*mul)(const double *a, const double *b, double *out, std::size_t n);
  /// x *= alpha
  void (*scale)(double alpha, double *x, std::size_t n);
};

const KernelTable &scalar_table() noexcept;
/// nullptr when the variant is not compiled in or not supported by this CPU.
const KernelTable *avx2_table() noexcept;
const KernelTable *neon_table() noexcept;

/// Table chosen at first use: MAWGAN_SIMD=scalar|avx2|neon overrides the
/// CPU probe; unsupported requests fall back to scalar.
const KernelTable &active() noexcept;
Isa active_isa() noexcept;

/// Pins the active table (tests and benchmarks). Returns false if `isa` is
/// unavailable, leaving the selection unchanged.
bool select(Isa isa) noexcept;

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}

// Row-major dense products, accumulate into C (C += ...).
// A is m x k, B is k x n, C is m x n.
void gemm_nn(std::size_t m, std::size_t k, std::size_t n, const double *a,
             const double *b, double *c);
// A is m x k, B is n x k (used transposed), C is m x n.
void gemm_nt(std::size_t m, std::size_t k, std::size_t n, const double *a,
             const double *b, double *c);
// A is k x m (used transposed), B is k x n, C is m x n.
void gemm_tn(std::size_t m, std::size_t k, std::size_t n, const double *a,
             const double *b, double *c);

} // namespace mawgan::simd
