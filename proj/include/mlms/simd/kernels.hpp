// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string_view>

namespace mlms::simd {

enum class Backend { scalar, avx2 };
enum class Transpose { no, yes };

std::string_view backend_name(Backend backend);

/// Best backend the running CPU supports (AVX2+FMA when compiled in and available).
Backend detected_backend();

/// Backend currently used by the float dispatchers. Initialised from
/// detected_backend(), or from MLMS_SIMD=scalar|avx2 when set.
Backend active_backend();

/// Switch the float dispatchers. Throws std::invalid_argument if the backend
/// is not available on this CPU/build. Not thread-safe: call before any worker
/// threads are started.
void set_backend(Backend backend);

// Row-major GEMM: C = alpha * op(A) * op(B) + beta * C, op(A) is m x k,
// op(B) is k x n. beta == 0 overwrites C without reading it.
void gemm(Transpose trans_a, Transpose trans_b, std::size_t m, std::size_t n, std::size_t k,
          float alpha, const float* a, std::size_t lda, const float* b, std::size_t ldb,
          float beta, float* c, std::size_t ldc);
void gemm(Transpose trans_a, Transpose trans_b, std::size_t m, std::size_t n, std::size_t k,
          double alpha, const double* a, std::size_t lda, const double* b, std::size_t ldb,
          double beta, double* c, std::size_t ldc);

/// out[c] = max over r of x[r * cols + c]. rows >= 1.
void column_max(const float* x, std::size_t rows, std::size_t cols, float* out);
void column_max(const double* x, std::size_t rows, std::size_t cols, double* out);

/// In place x[r, c] = x[r, c] * scale[c] + shift[c].
void channel_affine(float* x, std::size_t rows, std::size_t cols, const float* scale,
                    const float* shift);
void channel_affine(double* x, std::size_t rows, std::size_t cols, const double* scale,
                    const double* shift);

/// Nesterov momentum update for n elements:
///   v <- mu * v - lr * g;  x <- x + mu * v - lr * g
void nesterov_update(float* value, float* velocity, const float* grad, std::size_t n,
                     float lr, float momentum);
void nesterov_update(double* value, double* velocity, const double* grad, std::size_t n,
                     double lr, double momentum);

}  // namespace mlms::simd
