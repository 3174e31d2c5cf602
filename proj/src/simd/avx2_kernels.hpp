// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>

#include "mlms/simd/kernels.hpp"

// Implemented in avx2_kernels.cpp, which is the only translation unit built
// with -mavx2 -mfma. Callers must check cpu support before use.
namespace mlms::simd::avx2 {

void gemm(Transpose trans_a, Transpose trans_b, std::size_t m, std::size_t n, std::size_t k,
          float alpha, const float* a, std::size_t lda, const float* b, std::size_t ldb,
          float beta, float* c, std::size_t ldc);
void column_max(const float* x, std::size_t rows, std::size_t cols, float* out);
void channel_affine(float* x, std::size_t rows, std::size_t cols, const float* scale,
                    const float* shift);
void nesterov_update(float* value, float* velocity, const float* grad, std::size_t n, float lr,
                     float momentum);

}  // namespace mlms::simd::avx2
