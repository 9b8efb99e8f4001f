#pragma once

#include <cstddef>

#include <Eigen/Core>

namespace plantxvit::detail {

// C[m,n] (+)= op(A)[m,k] * op(B)[k,n] on contiguous row-major buffers.
template <typename T>
void gemm(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n,
          bool transpose_a, bool transpose_b, bool accumulate) {
  using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using ConstMap = Eigen::Map<const Mat>;
  const auto rows = static_cast<Eigen::Index>(m);
  const auto inner = static_cast<Eigen::Index>(k);
  const auto cols = static_cast<Eigen::Index>(n);
  Eigen::Map<Mat> out(c, rows, cols);
  if (!accumulate) out.setZero();
  if (!transpose_a && !transpose_b) {
    out.noalias() += ConstMap(a, rows, inner) * ConstMap(b, inner, cols);
  } else if (!transpose_a && transpose_b) {
    out.noalias() += ConstMap(a, rows, inner) * ConstMap(b, cols, inner).transpose();
  } else if (transpose_a && !transpose_b) {
    out.noalias() += ConstMap(a, inner, rows).transpose() * ConstMap(b, inner, cols);
  } else {
    out.noalias() += ConstMap(a, inner, rows).transpose() * ConstMap(b, cols, inner).transpose();
  }
}

}  // namespace plantxvit::detail
