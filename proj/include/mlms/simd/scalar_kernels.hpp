// SPDX-License-Identifier: Apache-2.0
#pragma once

// Portable reference kernels. These define the numerical contract the SIMD
// variants are tested against, and serve double precision everywhere.

#include <cstddef>

#include "mlms/simd/kernels.hpp"

namespace mlms::simd::scalar {

template <typename T>
void gemm(Transpose trans_a, Transpose trans_b, std::size_t m, std::size_t n, std::size_t k,
          T alpha, const T* a, std::size_t lda, const T* b, std::size_t ldb, T beta, T* c,
          std::size_t ldc) {
  for (std::size_t i = 0; i < m; ++i) {
    T* crow = c + i * ldc;
    if (beta == T(0)) {
      for (std::size_t j = 0; j < n; ++j) crow[j] = T(0);
    } else if (beta != T(1)) {
      for (std::size_t j = 0; j < n; ++j) crow[j] *= beta;
    }
  }
  if (m == 0 || n == 0 || k == 0) return;

  const bool ta = trans_a == Transpose::yes;
  const bool tb = trans_b == Transpose::yes;
  if (!ta && !tb) {
    for (std::size_t i = 0; i < m; ++i) {
      T* crow = c + i * ldc;
      for (std::size_t p = 0; p < k; ++p) {
        const T aik = alpha * a[i * lda + p];
        const T* brow = b + p * ldb;
        for (std::size_t j = 0; j < n; ++j) crow[j] += aik * brow[j];
      }
    }
  } else if (!ta && tb) {
    for (std::size_t i = 0; i < m; ++i) {
      const T* arow = a + i * lda;
      for (std::size_t j = 0; j < n; ++j) {
        const T* brow = b + j * ldb;
        T acc = T(0);
        for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
        c[i * ldc + j] += alpha * acc;
      }
    }
  } else if (ta && !tb) {
    for (std::size_t p = 0; p < k; ++p) {
      const T* arow = a + p * lda;
      const T* brow = b + p * ldb;
      for (std::size_t i = 0; i < m; ++i) {
        const T aik = alpha * arow[i];
        T* crow = c + i * ldc;
        for (std::size_t j = 0; j < n; ++j) crow[j] += aik * brow[j];
      }
    }
  } else {
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        T acc = T(0);
        for (std::size_t p = 0; p < k; ++p) acc += a[p * lda + i] * b[j * ldb + p];
        c[i * ldc + j] += alpha * acc;
      }
    }
  }
}

template <typename T>
void column_max(const T* x, std::size_t rows, std::size_t cols, T* out) {
  for (std::size_t c = 0; c < cols; ++c) out[c] = x[c];
  for (std::size_t r = 1; r < rows; ++r) {
    const T* row = x + r * cols;
    for (std::size_t c = 0; c < cols; ++c) {
      if (row[c] > out[c]) out[c] = row[c];
    }
  }
}

template <typename T>
void channel_affine(T* x, std::size_t rows, std::size_t cols, const T* scale, const T* shift) {
  for (std::size_t r = 0; r < rows; ++r) {
    T* row = x + r * cols;
    for (std::size_t c = 0; c < cols; ++c) row[c] = row[c] * scale[c] + shift[c];
  }
}

template <typename T>
void nesterov_update(T* value, T* velocity, const T* grad, std::size_t n, T lr, T momentum) {
  for (std::size_t i = 0; i < n; ++i) {
    const T step = lr * grad[i];
    const T v = momentum * velocity[i] - step;
    velocity[i] = v;
    value[i] += momentum * v - step;
  }
}

}  // namespace mlms::simd::scalar
