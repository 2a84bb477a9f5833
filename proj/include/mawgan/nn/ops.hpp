// SPDX-License-Identifier: Apache-2.0
//
// Differentiable primitives. Shapes are (rows x cols); rows index samples in
// a batch. "Block" ops treat each row as consecutive blocks of `block`
// columns (e.g. one block per frame or per 3-D joint).
#pragma once

#include <cstddef>
#include <span>

#include "mawgan/motion.hpp"
#include "mawgan/nn/tape.hpp"

namespace mawgan::nn {

// -- linear algebra
Var matmul(Var a, Var b);    ///< (m x k)(k x n)
Var matmul_nt(Var a, Var b); ///< (m x k)(n x k)^T
/// x W^T + b for x (m x in), W (out x in), b (1 x out).
Var affine(Var x, Var w, Var b);

// -- elementwise, same shapes
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);
Var scale(Var a, double s);
Var add_scalar(Var a, double s);

// -- broadcasting
Var add_rowvec(Var a, Var row);   ///< row is 1 x cols
Var mul_colvec(Var a, Var col);   ///< col is rows x 1, scales each row

// -- activations and pointwise functions
Var leaky_relu(Var a, double slope);
Var tanh(Var a);
Var square(Var a);
Var sqrt(Var a);   ///< derivative taken as 0 at 0
Var abs(Var a);    ///< derivative taken as 0 at 0
Var sin(Var a);
Var cos(Var a);
Var sinc(Var a);   ///< sin(x)/x with sinc(0) = 1
/// acos(clamp(u, -limit, limit)); derivative is 0 where the clamp is active.
Var acos_clamped(Var a, double limit = 1.0 - 1e-7);

// -- reductions
Var sum(Var a);      ///< 1 x 1
Var mean(Var a);     ///< 1 x 1
Var row_sum(Var a);  ///< rows x 1
Var row_norm(Var a); ///< rows x 1 Euclidean norms, subgradient 0 at 0

// -- block ops
Var block_sum(Var a, std::size_t block);  ///< rows x (cols/block)
Var block_norm(Var a, std::size_t block); ///< rows x (cols/block)
/// Multiplies block j of each row by w(row, j); w is rows x (cols/block).
Var block_scale(Var a, Var w, std::size_t block);
/// Inclusive running sum over blocks: out block j = sum_{i<=j} a block i.
Var cumsum_blocks(Var a, std::size_t block);
/// Adds `start` (rows x block) to every block of the row.
Var add_block_broadcast(Var a, Var start, std::size_t block);

// -- pose ops; each row holds F frames of k joints (3k values per frame)
/// Per frame, the 3x3 matrix A_f^T B_f with A_f, B_f the k x 3 joint
/// matrices. Output rows x (9F), row-major 3x3 blocks.
Var pose_cross(Var a, Var b, std::size_t joints);
/// Sum of singular values of every 3x3 block; rows x (cols/9). The
/// gradient is U V^T from the computed decomposition.
Var nuclear_norm3x3(Var m);
/// child - parent joint vectors for every bone and frame; rows x (3BF).
Var bone_vectors(Var a, std::span<const Bone> bones, std::size_t joints);

} // namespace mawgan::nn
