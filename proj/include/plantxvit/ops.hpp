#pragma once

#include <cstddef>
#include <vector>

#include "plantxvit/tensor.hpp"

// Differentiable tensor primitives. Every function records itself on the tape
// of its tracked inputs; with no tracked input it is a plain computation.
// Instantiated for float (training and inference) and double (gradient checks).

namespace plantxvit {

inline constexpr double kLayerNormEpsilon = 1e-6;

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);

// Elementwise product.
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> scale(const Tensor<T>& x, T factor);

// x + y where y's shape equals the trailing dimensions of x (bias rows,
// positional tables).
template <typename T>
Tensor<T> add_trailing(const Tensor<T>& x, const Tensor<T>& y);

// Sum of all elements, shape [1].
template <typename T>
Tensor<T> sum(const Tensor<T>& x);

template <typename T>
Tensor<T> mean(const Tensor<T>& x);

// Mean over one axis; the axis is removed from the shape.
template <typename T>
Tensor<T> mean_axis(const Tensor<T>& x, std::size_t axis);

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape);

// [m,k] x [k,n] -> [m,n].
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);

// [b,m,k] x [b,k,n] -> [b,m,n]; with transpose_b the right operand is
// [b,n,k] and is used transposed.
template <typename T>
Tensor<T> batch_matmul(const Tensor<T>& a, const Tensor<T>& b, bool transpose_b = false);

// Numerically stable softmax (max-subtracted) along `axis`.
template <typename T>
Tensor<T> softmax(const Tensor<T>& x, std::size_t axis);

template <typename T>
Tensor<T> log(const Tensor<T>& x);

// Clamps into [lo, hi]; the gradient is zero where the clamp is active.
template <typename T>
Tensor<T> clip(const Tensor<T>& x, T lo, T hi);

// max(0, x); the derivative at exactly 0 is 0.
template <typename T>
Tensor<T> relu(const Tensor<T>& x);

// Exact GELU: 0.5 x (1 + erf(x / sqrt 2)).
template <typename T>
Tensor<T> gelu(const Tensor<T>& x);

// Standardises the last axis (population variance, eps inside the square
// root) and applies gamma/beta, both shaped [last dim].
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                     T eps = static_cast<T>(kLayerNormEpsilon));

// Concatenation along the last axis; leading dimensions must agree.
template <typename T>
Tensor<T> concat_last(const std::vector<Tensor<T>>& parts);

// Columns [begin, end) of the last axis.
template <typename T>
Tensor<T> slice_last(const Tensor<T>& x, std::size_t begin, std::size_t end);

}  // namespace plantxvit
