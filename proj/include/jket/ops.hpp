#pragma once

#include <vector>

#include "jket/tensor.hpp"

namespace jket {

// Primitive forward ops. Each one validates operand shapes (ShapeError),
// rejects non-finite outputs (NumericError), and records a backward step on
// the active tape when any input requires grad. Gradients accumulate, so a
// value consumed by several ops receives the sum of all path gradients.

template <typename S>
Tensor<S> matmul(const Tensor<S>& a, const Tensor<S>& b);  // [m,k]x[k,n] -> [m,n]

template <typename S>
Tensor<S> matmul_nt(const Tensor<S>& a, const Tensor<S>& b);  // [m,k]x[n,k]^T -> [m,n]

// Same-shape add, or row-broadcast bias add [m,n] + [n]. No other
// broadcasting exists anywhere in the engine.
template <typename S>
Tensor<S> add(const Tensor<S>& a, const Tensor<S>& b);

template <typename S>
Tensor<S> sub(const Tensor<S>& a, const Tensor<S>& b);

template <typename S>
Tensor<S> mul(const Tensor<S>& a, const Tensor<S>& b);  // elementwise, exact shapes

// Elementwise x*mul_c + add_c with scalar constants.
template <typename S>
Tensor<S> affine(const Tensor<S>& a, S mul_c, S add_c);

template <typename S>
Tensor<S> clamp(const Tensor<S>& a, S lo, S hi);

template <typename S>
Tensor<S> concat(const std::vector<Tensor<S>>& parts, int axis);

template <typename S>
Tensor<S> slice(const Tensor<S>& a, int axis, int start, int len);

// Stack rank-1 rows of equal length into [n, k].
template <typename S>
Tensor<S> stack_rows(const std::vector<Tensor<S>>& rows);

template <typename S>
Tensor<S> reshape(const Tensor<S>& a, Shape shape);

// Gather rows of table [V, d] by index; backward scatter-adds into the table.
template <typename S>
Tensor<S> embedding_lookup(const Tensor<S>& table, const std::vector<int>& indices);

template <typename S>
Tensor<S> sigmoid(const Tensor<S>& a);

template <typename S>
Tensor<S> tanh_op(const Tensor<S>& a);

template <typename S>
Tensor<S> relu(const Tensor<S>& a);

template <typename S>
Tensor<S> log_op(const Tensor<S>& a);  // NumericError on inputs <= 0

// Rank-1, or rank-2 applied per row.
template <typename S>
Tensor<S> softmax(const Tensor<S>& a);

template <typename S>
Tensor<S> sum_all(const Tensor<S>& a);  // -> scalar

template <typename S>
Tensor<S> mean_all(const Tensor<S>& a);  // -> scalar

template <typename S>
Tensor<S> sum_axis(const Tensor<S>& a, int axis);  // [m,n] -> [n] (axis 0) or [m] (axis 1)

template <typename S>
Tensor<S> mean_axis0(const Tensor<S>& a);  // [m,n] -> [n]

template <typename S>
Tensor<S> dot(const Tensor<S>& a, const Tensor<S>& b);  // rank-1 -> scalar

template <typename S>
Tensor<S> rowwise_dot(const Tensor<S>& a, const Tensor<S>& b);  // [m,k],[m,k] -> [m]

// Masked sum over rows of -log softmax(logits)[target]. mask[i] in {0,1};
// masked rows contribute nothing. Callers divide by their own token count.
template <typename S>
Tensor<S> cross_entropy_logits(const Tensor<S>& logits, const std::vector<int>& targets,
                               const std::vector<S>& mask);

// Batch normalization over the batch axis of x [B, F]. In training mode the
// batch statistics normalize and the running buffers are folded in with
// `momentum` decay; in eval mode the running buffers normalize. Running
// buffers are plain value tensors, never taped.
template <typename S>
Tensor<S> batch_norm(const Tensor<S>& x, const Tensor<S>& gamma, const Tensor<S>& beta,
                     Tensor<S>& running_mean, Tensor<S>& running_var, bool training,
                     S momentum, S eps);

}  // namespace jket
