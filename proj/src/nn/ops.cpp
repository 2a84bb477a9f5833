// SPDX-License-Identifier: Apache-2.0

#include "mawgan/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "mawgan/simd/kernels.hpp"
#include "mawgan/svd3.hpp"

namespace mawgan::nn {

namespace {

void same_shape(Var a, Var b, const char *op) {
  if (!a.value().same_shape(b.value()))
    fail(ErrorKind::shape, std::string(op) + ": operand shapes " +
                               a.value().shape_string() + " and " +
                               b.value().shape_string() + " differ");
}

void divisible(Var a, std::size_t block, const char *op) {
  if (block == 0 || a.cols() % block != 0)
    fail(ErrorKind::shape, std::string(op) + ": " + std::to_string(a.cols()) +
                               " columns are not a multiple of block " +
                               std::to_string(block));
}

// Records y = f(x) elementwise with dy/dx = df(x, y).
template <class F, class DF> Var unary(Var a, F f, DF df) {
  const Tensor &x = a.value();
  Tensor y(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i)
    y[i] = f(x[i]);
  Tape &tape = *a.tape;
  const std::uint32_t out_id = static_cast<std::uint32_t>(tape.size());
  return tape.record(std::move(y), {a}, [a, df, out_id](Tape &t, const Tensor &g) {
    const Tensor &x = t.value(a);
    const Tensor &y = t.value(Var{&t, out_id});
    Tensor &ga = t.grad_buffer(a);
    for (std::size_t i = 0; i < x.size(); ++i)
      ga[i] += g[i] * df(x[i], y[i]);
  });
}

} // namespace

Var matmul(Var a, Var b) {
  const Tensor &A = a.value();
  const Tensor &B = b.value();
  if (A.cols() != B.rows())
    fail(ErrorKind::shape, "matmul: " + A.shape_string() + " x " + B.shape_string());
  const std::size_t m = A.rows(), k = A.cols(), n = B.cols();
  Tensor C(m, n);
  simd::gemm_nn(m, k, n, A.data(), B.data(), C.data());
  return a.tape->record(std::move(C), {a, b}, [a, b, m, k, n](Tape &t, const Tensor &g) {
    if (t.requires_grad(a)) // dA = G B^T
      simd::gemm_nt(m, n, k, g.data(), t.value(b).data(), t.grad_buffer(a).data());
    if (t.requires_grad(b)) // dB = A^T G
      simd::gemm_tn(k, m, n, t.value(a).data(), g.data(), t.grad_buffer(b).data());
  });
}

Var matmul_nt(Var a, Var b) {
  const Tensor &A = a.value();
  const Tensor &B = b.value();
  if (A.cols() != B.cols())
    fail(ErrorKind::shape,
         "matmul_nt: " + A.shape_string() + " x " + B.shape_string() + "^T");
  const std::size_t m = A.rows(), k = A.cols(), n = B.rows();
  Tensor C(m, n);
  simd::gemm_nt(m, k, n, A.data(), B.data(), C.data());
  return a.tape->record(std::move(C), {a, b}, [a, b, m, k, n](Tape &t, const Tensor &g) {
    if (t.requires_grad(a)) // dA = G B
      simd::gemm_nn(m, n, k, g.data(), t.value(b).data(), t.grad_buffer(a).data());
    if (t.requires_grad(b)) // dB = G^T A
      simd::gemm_tn(n, m, k, g.data(), t.value(a).data(), t.grad_buffer(b).data());
  });
}

Var affine(Var x, Var w, Var b) { return add_rowvec(matmul_nt(x, w), b); }

Var add(Var a, Var b) {
  same_shape(a, b, "add");
  Tensor y = a.value();
  simd::active().axpy(1.0, b.value().data(), y.data(), y.size());
  return a.tape->record(std::move(y), {a, b}, [a, b](Tape &t, const Tensor &g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

Var sub(Var a, Var b) {
  same_shape(a, b, "sub");
  Tensor y = a.value();
  simd::active().axpy(-1.0, b.value().data(), y.data(), y.size());
  return a.tape->record(std::move(y), {a, b}, [a, b](Tape &t, const Tensor &g) {
    t.accumulate(a, g);
    if (t.requires_grad(b))
      simd::active().axpy(-1.0, g.data(), t.grad_buffer(b).data(), g.size());
  });
}

Var mul(Var a, Var b) {
  same_shape(a, b, "mul");
  const Tensor &A = a.value();
  Tensor y(A.rows(), A.cols());
  simd::active().mul(A.data(), b.value().data(), y.data(), y.size());
  return a.tape->record(std::move(y), {a, b}, [a, b](Tape &t, const Tensor &g) {
    Tensor tmp(g.rows(), g.cols());
    if (t.requires_grad(a)) {
      simd::active().mul(g.data(), t.value(b).data(), tmp.data(), g.size());
      t.accumulate(a, tmp);
    }
    if (t.requires_grad(b)) {
      simd::active().mul(g.data(), t.value(a).data(), tmp.data(), g.size());
      t.accumulate(b, tmp);
    }
  });
}

Var div(Var a, Var b) {
  same_shape(a, b, "div");
  const Tensor &A = a.value();
  const Tensor &B = b.value();
  Tensor y(A.rows(), A.cols());
  for (std::size_t i = 0; i < y.size(); ++i)
    y[i] = A[i] / B[i];
  return a.tape->record(std::move(y), {a, b}, [a, b](Tape &t, const Tensor &g) {
    const Tensor &A = t.value(a);
    const Tensor &B = t.value(b);
    if (t.requires_grad(a)) {
      Tensor &ga = t.grad_buffer(a);
      for (std::size_t i = 0; i < g.size(); ++i)
        ga[i] += g[i] / B[i];
    }
    if (t.requires_grad(b)) {
      Tensor &gb = t.grad_buffer(b);
      for (std::size_t i = 0; i < g.size(); ++i)
        gb[i] -= g[i] * A[i] / (B[i] * B[i]);
    }
  });
}

Var scale(Var a, double s) {
  Tensor y = a.value();
  simd::active().scale(s, y.data(), y.size());
  return a.tape->record(std::move(y), {a}, [a, s](Tape &t, const Tensor &g) {
    simd::active().axpy(s, g.data(), t.grad_buffer(a).data(), g.size());
  });
}

Var add_scalar(Var a, double s) {
  Tensor y = a.value();
  for (double &v : y.values())
    v += s;
  return a.tape->record(std::move(y), {a},
                        [a](Tape &t, const Tensor &g) { t.accumulate(a, g); });
}

Var add_rowvec(Var a, Var row) {
  const Tensor &A = a.value();
  const Tensor &R = row.value();
  if (R.rows() != 1 || R.cols() != A.cols())
    fail(ErrorKind::shape, "add_rowvec: " + A.shape_string() + " + " + R.shape_string());
  Tensor y = A;
  for (std::size_t r = 0; r < y.rows(); ++r)
    simd::active().axpy(1.0, R.data(), y.row_span(r).data(), y.cols());
  return a.tape->record(std::move(y), {a, row}, [a, row](Tape &t, const Tensor &g) {
    t.accumulate(a, g);
    if (t.requires_grad(row)) {
      Tensor &gr = t.grad_buffer(row);
      for (std::size_t r = 0; r < g.rows(); ++r)
        simd::active().axpy(1.0, g.row_span(r).data(), gr.data(), g.cols());
    }
  });
}

Var mul_colvec(Var a, Var col) {
  const Tensor &A = a.value();
  const Tensor &C = col.value();
  if (C.cols() != 1 || C.rows() != A.rows())
    fail(ErrorKind::shape, "mul_colvec: " + A.shape_string() + " * " + C.shape_string());
  Tensor y = A;
  for (std::size_t r = 0; r < y.rows(); ++r)
    simd::active().scale(C[r], y.row_span(r).data(), y.cols());
  return a.tape->record(std::move(y), {a, col}, [a, col](Tape &t, const Tensor &g) {
    const Tensor &A = t.value(a);
    const Tensor &C = t.value(col);
    if (t.requires_grad(a)) {
      Tensor &ga = t.grad_buffer(a);
      for (std::size_t r = 0; r < g.rows(); ++r)
        simd::active().axpy(C[r], g.row_span(r).data(), ga.row_span(r).data(), g.cols());
    }
    if (t.requires_grad(col)) {
      Tensor &gc = t.grad_buffer(col);
      for (std::size_t r = 0; r < g.rows(); ++r)
        gc[r] += simd::active().dot(g.row_span(r).data(), A.row_span(r).data(), g.cols());
    }
  });
}

Var leaky_relu(Var a, double slope) {
  return unary(
      a, [slope](double x) { return x > 0.0 ? x : slope * x; },
      [slope](double x, double) { return x > 0.0 ? 1.0 : slope; });
}

Var tanh(Var a) {
  return unary(
      a, [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Var square(Var a) {
  return unary(
      a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var sqrt(Var a) {
  return unary(
      a, [](double x) { return std::sqrt(x); },
      [](double, double y) { return y > 0.0 ? 0.5 / y : 0.0; });
}

Var abs(Var a) {
  return unary(
      a, [](double x) { return std::abs(x); },
      [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

Var sin(Var a) {
  return unary(
      a, [](double x) { return std::sin(x); },
      [](double x, double) { return std::cos(x); });
}

Var cos(Var a) {
  return unary(
      a, [](double x) { return std::cos(x); },
      [](double x, double) { return -std::sin(x); });
}

Var sinc(Var a) {
  return unary(
      a,
      [](double x) {
        if (std::abs(x) < 1e-4) {
          const double x2 = x * x;
          return 1.0 - x2 / 6.0 + x2 * x2 / 120.0;
        }
        return std::sin(x) / x;
      },
      [](double x, double) {
        if (std::abs(x) < 1e-4)
          return -x / 3.0 + x * x * x / 30.0;
        return (x * std::cos(x) - std::sin(x)) / (x * x);
      });
}

Var acos_clamped(Var a, double limit) {
  return unary(
      a,
      [limit](double u) { return std::acos(std::clamp(u, -limit, limit)); },
      [limit](double u, double) {
        if (u >= limit || u <= -limit)
          return 0.0;
        return -1.0 / std::sqrt(1.0 - u * u);
      });
}

Var sum(Var a) {
  const Tensor &A = a.value();
  double s = 0.0;
  for (double v : A.values())
    s += v;
  return a.tape->record(Tensor::scalar(s), {a}, [a](Tape &t, const Tensor &g) {
    Tensor &ga = t.grad_buffer(a);
    const double gv = g[0];
    for (double &v : ga.values())
      v += gv;
  });
}

Var mean(Var a) {
  const double n = static_cast<double>(a.value().size());
  return scale(sum(a), 1.0 / n);
}

Var row_sum(Var a) {
  const Tensor &A = a.value();
  Tensor y(A.rows(), 1);
  for (std::size_t r = 0; r < A.rows(); ++r) {
    double s = 0.0;
    for (double v : A.row_span(r))
      s += v;
    y[r] = s;
  }
  return a.tape->record(std::move(y), {a}, [a](Tape &t, const Tensor &g) {
    Tensor &ga = t.grad_buffer(a);
    for (std::size_t r = 0; r < ga.rows(); ++r)
      for (double &v : ga.row_span(r))
        v += g[r];
  });
}

Var row_norm(Var a) { return block_norm(a, a.cols()); }

Var block_sum(Var a, std::size_t block) {
  divisible(a, block, "block_sum");
  const Tensor &A = a.value();
  const std::size_t nb = A.cols() / block;
  Tensor y(A.rows(), nb);
  for (std::size_t r = 0; r < A.rows(); ++r)
    for (std::size_t j = 0; j < nb; ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < block; ++c)
        s += A(r, j * block + c);
      y(r, j) = s;
    }
  return a.tape->record(std::move(y), {a}, [a, block, nb](Tape &t, const Tensor &g) {
    Tensor &ga = t.grad_buffer(a);
    for (std::size_t r = 0; r < ga.rows(); ++r)
      for (std::size_t j = 0; j < nb; ++j)
        for (std::size_t c = 0; c < block; ++c)
          ga(r, j * block + c) += g(r, j);
  });
}

Var block_norm(Var a, std::size_t block) {
  divisible(a, block, "block_norm");
  const Tensor &A = a.value();
  const std::size_t nb = A.cols() / block;
  Tensor y(A.rows(), nb);
  for (std::size_t r = 0; r < A.rows(); ++r)
    for (std::size_t j = 0; j < nb; ++j) {
      const double *p = A.data() + r * A.cols() + j * block;
      y(r, j) = std::sqrt(simd::active().dot(p, p, block));
    }
  const std::uint32_t out_id = static_cast<std::uint32_t>(a.tape->size());
  return a.tape->record(std::move(y), {a}, [a, block, nb, out_id](Tape &t, const Tensor &g) {
    const Tensor &A = t.value(a);
    const Tensor &Y = t.value(Var{&t, out_id});
    Tensor &ga = t.grad_buffer(a);
    for (std::size_t r = 0; r < A.rows(); ++r)
      for (std::size_t j = 0; j < nb; ++j) {
        const double n = Y(r, j);
        if (!(n > 0.0))
          continue;
        const std::size_t off = r * A.cols() + j * block;
        simd::active().axpy(g(r, j) / n, A.data() + off, ga.data() + off, block);
      }
  });
}

Var block_scale(Var a, Var w, std::size_t block) {
  divisible(a, block, "block_scale");
  const Tensor &A = a.value();
  const Tensor &W = w.value();
  const std::size_t nb = A.cols() / block;
  if (W.rows() != A.rows() || W.cols() != nb)
    fail(ErrorKind::shape, "block_scale: weights " + W.shape_string() +
                               " do not match " + A.shape_string() +
                               " with block " + std::to_string(block));
  Tensor y = A;
  for (std::size_t r = 0; r < A.rows(); ++r)
    for (std::size_t j = 0; j < nb; ++j)
      simd::active().scale(W(r, j), y.data() + r * A.cols() + j * block, block);
  return a.tape->record(std::move(y), {a, w}, [a, w, block, nb](Tape &t, const Tensor &g) {
    const Tensor &A = t.value(a);
    const Tensor &W = t.value(w);
    const bool da = t.requires_grad(a);
    const bool dw = t.requires_grad(w);
    for (std::size_t r = 0; r < A.rows(); ++r)
      for (std::size_t j = 0; j < nb; ++j) {
        const std::size_t off = r * A.cols() + j * block;
        if (da)
          simd::active().axpy(W(r, j), g.data() + off, t.grad_buffer(a).data() + off,
                              block);
        if (dw)
          t.grad_buffer(w)(r, j) +=
              simd::active().dot(g.data() + off, A.data() + off, block);
      }
  });
}

Var cumsum_blocks(Var a, std::size_t block) {
  divisible(a, block, "cumsum_blocks");
  const Tensor &A = a.value();
  const std::size_t nb = A.cols() / block;
  Tensor y = A;
  for (std::size_t r = 0; r < y.rows(); ++r)
    for (std::size_t j = 1; j < nb; ++j)
      simd::active().axpy(1.0, y.data() + r * y.cols() + (j - 1) * block,
                          y.data() + r * y.cols() + j * block, block);
  return a.tape->record(std::move(y), {a}, [a, block, nb](Tape &t, const Tensor &g) {
    // Adjoint of a prefix sum is a suffix sum.
    Tensor s = g;
    for (std::size_t r = 0; r < s.rows(); ++r)
      for (std::size_t j = nb - 1; j-- > 0;)
        simd::active().axpy(1.0, s.data() + r * s.cols() + (j + 1) * block,
                            s.data() + r * s.cols() + j * block, block);
    t.accumulate(a, s);
  });
}

Var add_block_broadcast(Var a, Var start, std::size_t block) {
  divisible(a, block, "add_block_broadcast");
  const Tensor &A = a.value();
  const Tensor &S = start.value();
  if (S.rows() != A.rows() || S.cols() != block)
    fail(ErrorKind::shape, "add_block_broadcast: start " + S.shape_string() +
                               " does not match rows of " + A.shape_string());
  const std::size_t nb = A.cols() / block;
  Tensor y = A;
  for (std::size_t r = 0; r < y.rows(); ++r)
    for (std::size_t j = 0; j < nb; ++j)
      simd::active().axpy(1.0, S.row_span(r).data(),
                          y.data() + r * y.cols() + j * block, block);
  return a.tape->record(std::move(y), {a, start}, [a, start, block, nb](Tape &t, const Tensor &g) {
    t.accumulate(a, g);
    if (t.requires_grad(start)) {
      Tensor &gs = t.grad_buffer(start);
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t j = 0; j < nb; ++j)
          simd::active().axpy(1.0, g.data() + r * g.cols() + j * block,
                              gs.row_span(r).data(), block);
    }
  });
}

Var pose_cross(Var a, Var b, std::size_t joints) {
  same_shape(a, b, "pose_cross");
  const std::size_t fdim = 3 * joints;
  divisible(a, fdim, "pose_cross");
  const Tensor &A = a.value();
  const Tensor &B = b.value();
  const std::size_t frames = A.cols() / fdim;
  Tensor y(A.rows(), 9 * frames);
  for (std::size_t r = 0; r < A.rows(); ++r)
    for (std::size_t f = 0; f < frames; ++f) {
      const double *pa = A.data() + r * A.cols() + f * fdim;
      const double *pb = B.data() + r * B.cols() + f * fdim;
      double *m = y.data() + r * y.cols() + 9 * f;
      for (std::size_t j = 0; j < joints; ++j)
        for (int p = 0; p < 3; ++p)
          for (int q = 0; q < 3; ++q)
            m[3 * p + q] += pa[3 * j + p] * pb[3 * j + q];
    }
  return a.tape->record(std::move(y), {a, b}, [a, b, joints, frames, fdim](Tape &t, const Tensor &g) {
    const Tensor &A = t.value(a);
    const Tensor &B = t.value(b);
    const bool da = t.requires_grad(a);
    const bool db = t.requires_grad(b);
    for (std::size_t r = 0; r < A.rows(); ++r)
      for (std::size_t f = 0; f < frames; ++f) {
        const std::size_t off = r * A.cols() + f * fdim;
        const double *gm = g.data() + r * g.cols() + 9 * f;
        for (std::size_t j = 0; j < joints; ++j)
          for (int p = 0; p < 3; ++p)
            for (int q = 0; q < 3; ++q) {
              const double gv = gm[3 * p + q];
              if (da)
                t.grad_buffer(a)[off + 3 * j + p] += gv * B[off + 3 * j + q];
              if (db)
                t.grad_buffer(b)[off + 3 * j + q] += gv * A[off + 3 * j + p];
            }
      }
  });
}

Var nuclear_norm3x3(Var m) {
  divisible(m, 9, "nuclear_norm3x3");
  const Tensor &M = m.value();
  const std::size_t nb = M.cols() / 9;
  Tensor y(M.rows(), nb);
  // U V^T per block, kept for the reverse sweep.
  auto uvt = std::make_shared<std::vector<Mat3>>(M.rows() * nb);
  for (std::size_t r = 0; r < M.rows(); ++r)
    for (std::size_t j = 0; j < nb; ++j) {
      Mat3 block;
      std::copy_n(M.data() + r * M.cols() + 9 * j, 9, block.begin());
      const Svd3 s = svd3(block);
      y(r, j) = s.sigma[0] + s.sigma[1] + s.sigma[2];
      Mat3 &o = (*uvt)[r * nb + j];
      for (int p = 0; p < 3; ++p)
        for (int q = 0; q < 3; ++q)
          o[3 * p + q] = s.u[3 * p] * s.v[3 * q] + s.u[3 * p + 1] * s.v[3 * q + 1] +
                         s.u[3 * p + 2] * s.v[3 * q + 2];
    }
  return m.tape->record(std::move(y), {m}, [m, nb, uvt](Tape &t, const Tensor &g) {
    Tensor &gm = t.grad_buffer(m);
    for (std::size_t r = 0; r < gm.rows(); ++r)
      for (std::size_t j = 0; j < nb; ++j) {
        const Mat3 &o = (*uvt)[r * nb + j];
        double *dst = gm.data() + r * gm.cols() + 9 * j;
        for (int e = 0; e < 9; ++e)
          dst[e] += g(r, j) * o[e];
      }
  });
}

Var bone_vectors(Var a, std::span<const Bone> bones, std::size_t joints) {
  const std::size_t fdim = 3 * joints;
  divisible(a, fdim, "bone_vectors");
  for (const Bone &b : bones)
    if (b.parent >= joints || b.child >= joints)
      fail(ErrorKind::argument, "bone_vectors: bone references a missing joint");
  const Tensor &A = a.value();
  const std::size_t frames = A.cols() / fdim;
  const std::size_t nbones = bones.size();
  Tensor y(A.rows(), 3 * nbones * frames);
  for (std::size_t r = 0; r < A.rows(); ++r)
    for (std::size_t f = 0; f < frames; ++f) {
      const double *p = A.data() + r * A.cols() + f * fdim;
      double *o = y.data() + r * y.cols() + 3 * nbones * f;
      for (std::size_t k = 0; k < nbones; ++k)
        for (int c = 0; c < 3; ++c)
          o[3 * k + c] = p[3 * bones[k].child + c] - p[3 * bones[k].parent + c];
    }
  std::vector<Bone> kept(bones.begin(), bones.end());
  return a.tape->record(std::move(y), {a}, [a, kept, frames, fdim](Tape &t, const Tensor &g) {
    Tensor &ga = t.grad_buffer(a);
    const std::size_t nbones = kept.size();
    for (std::size_t r = 0; r < ga.rows(); ++r)
      for (std::size_t f = 0; f < frames; ++f) {
        double *p = ga.data() + r * ga.cols() + f * fdim;
        const double *o = g.data() + r * g.cols() + 3 * nbones * f;
        for (std::size_t k = 0; k < nbones; ++k)
          for (int c = 0; c < 3; ++c) {
            p[3 * kept[k].child + c] += o[3 * k + c];
            p[3 * kept[k].parent + c] -= o[3 * k + c];
          }
      }
  });
}

} // namespace mawgan::nn
