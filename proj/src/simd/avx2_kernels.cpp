// SPDX-License-Identifier: Apache-2.0
#include "avx2_kernels.hpp"

#include <immintrin.h>

#include <algorithm>
#include <cmath>
#include <vector>

namespace mlms::simd::avx2 {
namespace {

constexpr std::size_t kMr = 6;
constexpr std::size_t kNr = 16;
constexpr std::size_t kKc = 256;
constexpr std::size_t kMc = 96;
constexpr std::size_t kNc = 1024;

// Packs op(A)[i0:i0+mc, p0:p0+kc] into kMr-row panels, k-major, zero padded.
void pack_a(bool trans, const float* a, std::size_t lda, std::size_t i0, std::size_t mc,
            std::size_t p0, std::size_t kc, float* dst) {
  for (std::size_t ir = 0; ir < mc; ir += kMr) {
    const std::size_t rows = std::min(kMr, mc - ir);
    for (std::size_t p = 0; p < kc; ++p) {
      for (std::size_t r = 0; r < kMr; ++r) {
        float v = 0.0f;
        if (r < rows) {
          const std::size_t i = i0 + ir + r;
          v = trans ? a[(p0 + p) * lda + i] : a[i * lda + p0 + p];
        }
        *dst++ = v;
      }
    }
  }
}

// Packs op(B)[p0:p0+kc, j0:j0+nc] into kNr-column panels, k-major, zero padded.
void pack_b(bool trans, const float* b, std::size_t ldb, std::size_t p0, std::size_t kc,
            std::size_t j0, std::size_t nc, float* dst) {
  for (std::size_t jr = 0; jr < nc; jr += kNr) {
    const std::size_t cols = std::min(kNr, nc - jr);
    if (!trans && cols == kNr) {
      for (std::size_t p = 0; p < kc; ++p) {
        const float* src = b + (p0 + p) * ldb + j0 + jr;
        _mm256_storeu_ps(dst, _mm256_loadu_ps(src));
        _mm256_storeu_ps(dst + 8, _mm256_loadu_ps(src + 8));
        dst += kNr;
      }
      continue;
    }
    for (std::size_t p = 0; p < kc; ++p) {
      for (std::size_t j = 0; j < kNr; ++j) {
        float v = 0.0f;
        if (j < cols) {
          const std::size_t col = j0 + jr + j;
          v = trans ? b[col * ldb + p0 + p] : b[(p0 + p) * ldb + col];
        }
        *dst++ = v;
      }
    }
  }
}

// C[0:mr, 0:nr] += alpha * Ap * Bp. Partial tiles go through a scratch tile
// and std::fma so every element is rounded exactly like the full-tile path.
void kernel_6x16(std::size_t kc, const float* ap, const float* bp, float* c, std::size_t ldc,
                 float alpha, std::size_t mr, std::size_t nr) {
  __m256 c00 = _mm256_setzero_ps(), c01 = _mm256_setzero_ps();
  __m256 c10 = _mm256_setzero_ps(), c11 = _mm256_setzero_ps();
  __m256 c20 = _mm256_setzero_ps(), c21 = _mm256_setzero_ps();
  __m256 c30 = _mm256_setzero_ps(), c31 = _mm256_setzero_ps();
  __m256 c40 = _mm256_setzero_ps(), c41 = _mm256_setzero_ps();
  __m256 c50 = _mm256_setzero_ps(), c51 = _mm256_setzero_ps();

  for (std::size_t p = 0; p < kc; ++p) {
    const __m256 b0 = _mm256_loadu_ps(bp);
    const __m256 b1 = _mm256_loadu_ps(bp + 8);
    __m256 av = _mm256_broadcast_ss(ap + 0);
    c00 = _mm256_fmadd_ps(av, b0, c00);
    c01 = _mm256_fmadd_ps(av, b1, c01);
    av = _mm256_broadcast_ss(ap + 1);
    c10 = _mm256_fmadd_ps(av, b0, c10);
    c11 = _mm256_fmadd_ps(av, b1, c11);
    av = _mm256_broadcast_ss(ap + 2);
    c20 = _mm256_fmadd_ps(av, b0, c20);
    c21 = _mm256_fmadd_ps(av, b1, c21);
    av = _mm256_broadcast_ss(ap + 3);
    c30 = _mm256_fmadd_ps(av, b0, c30);
    c31 = _mm256_fmadd_ps(av, b1, c31);
    av = _mm256_broadcast_ss(ap + 4);
    c40 = _mm256_fmadd_ps(av, b0, c40);
    c41 = _mm256_fmadd_ps(av, b1, c41);
    av = _mm256_broadcast_ss(ap + 5);
    c50 = _mm256_fmadd_ps(av, b0, c50);
    c51 = _mm256_fmadd_ps(av, b1, c51);
    ap += kMr;
    bp += kNr;
  }

  const __m256 va = _mm256_set1_ps(alpha);
  if (mr == kMr && nr == kNr) {
    auto update = [&](float* row, __m256 lo, __m256 hi) {
      _mm256_storeu_ps(row, _mm256_fmadd_ps(lo, va, _mm256_loadu_ps(row)));
      _mm256_storeu_ps(row + 8, _mm256_fmadd_ps(hi, va, _mm256_loadu_ps(row + 8)));
    };
    update(c + 0 * ldc, c00, c01);
    update(c + 1 * ldc, c10, c11);
    update(c + 2 * ldc, c20, c21);
    update(c + 3 * ldc, c30, c31);
    update(c + 4 * ldc, c40, c41);
    update(c + 5 * ldc, c50, c51);
    return;
  }

  alignas(32) float tile[kMr * kNr];
  _mm256_store_ps(tile + 0 * kNr, c00);
  _mm256_store_ps(tile + 0 * kNr + 8, c01);
  _mm256_store_ps(tile + 1 * kNr, c10);
  _mm256_store_ps(tile + 1 * kNr + 8, c11);
  _mm256_store_ps(tile + 2 * kNr, c20);
  _mm256_store_ps(tile + 2 * kNr + 8, c21);
  _mm256_store_ps(tile + 3 * kNr, c30);
  _mm256_store_ps(tile + 3 * kNr + 8, c31);
  _mm256_store_ps(tile + 4 * kNr, c40);
  _mm256_store_ps(tile + 4 * kNr + 8, c41);
  _mm256_store_ps(tile + 5 * kNr, c50);
  _mm256_store_ps(tile + 5 * kNr + 8, c51);
  for (std::size_t r = 0; r < mr; ++r) {
    float* row = c + r * ldc;
    for (std::size_t j = 0; j < nr; ++j) row[j] = std::fma(tile[r * kNr + j], alpha, row[j]);
  }
}

}  // namespace

void gemm(Transpose trans_a, Transpose trans_b, std::size_t m, std::size_t n, std::size_t k,
          float alpha, const float* a, std::size_t lda, const float* b, std::size_t ldb,
          float beta, float* c, std::size_t ldc) {
  if (beta != 1.0f) {
    for (std::size_t i = 0; i < m; ++i) {
      float* row = c + i * ldc;
      if (beta == 0.0f) {
        std::fill(row, row + n, 0.0f);
      } else {
        for (std::size_t j = 0; j < n; ++j) row[j] *= beta;
      }
    }
  }
  if (m == 0 || n == 0 || k == 0 || alpha == 0.0f) return;

  const bool ta = trans_a == Transpose::yes;
  const bool tb = trans_b == Transpose::yes;
  thread_local std::vector<float> packed_a;
  thread_local std::vector<float> packed_b;
  packed_a.resize(kMc * kKc);
  packed_b.resize(kKc * kNc);

  for (std::size_t jc = 0; jc < n; jc += kNc) {
    const std::size_t nc = std::min(kNc, n - jc);
    for (std::size_t pc = 0; pc < k; pc += kKc) {
      const std::size_t kc = std::min(kKc, k - pc);
      pack_b(tb, b, ldb, pc, kc, jc, nc, packed_b.data());
      for (std::size_t ic = 0; ic < m; ic += kMc) {
        const std::size_t mc = std::min(kMc, m - ic);
        pack_a(ta, a, lda, ic, mc, pc, kc, packed_a.data());
        for (std::size_t jr = 0; jr < nc; jr += kNr) {
          const std::size_t nr = std::min(kNr, nc - jr);
          const float* bp = packed_b.data() + (jr / kNr) * kc * kNr;
          for (std::size_t ir = 0; ir < mc; ir += kMr) {
            const std::size_t mr = std::min(kMr, mc - ir);
            const float* ap = packed_a.data() + (ir / kMr) * kc * kMr;
            kernel_6x16(kc, ap, bp, c + (ic + ir) * ldc + jc + jr, ldc, alpha, mr, nr);
          }
        }
      }
    }
  }
}

void column_max(const float* x, std::size_t rows, std::size_t cols, float* out) {
  std::size_t c = 0;
  for (; c + 8 <= cols; c += 8) {
    __m256 best = _mm256_loadu_ps(x + c);
    for (std::size_t r = 1; r < rows; ++r) {
      // max_ps(a, b) = a > b ? a : b, the same selection as the scalar kernel.
      best = _mm256_max_ps(_mm256_loadu_ps(x + r * cols + c), best);
    }
    _mm256_storeu_ps(out + c, best);
  }
  for (; c < cols; ++c) {
    float best = x[c];
    for (std::size_t r = 1; r < rows; ++r) {
      const float v = x[r * cols + c];
      if (v > best) best = v;
    }
    out[c] = best;
  }
}

void channel_affine(float* x, std::size_t rows, std::size_t cols, const float* scale,
                    const float* shift) {
  for (std::size_t r = 0; r < rows; ++r) {
    float* row = x + r * cols;
    std::size_t c = 0;
    for (; c + 8 <= cols; c += 8) {
      const __m256 v = _mm256_loadu_ps(row + c);
      _mm256_storeu_ps(row + c,
                       _mm256_fmadd_ps(v, _mm256_loadu_ps(scale + c), _mm256_loadu_ps(shift + c)));
    }
    for (; c < cols; ++c) row[c] = std::fma(row[c], scale[c], shift[c]);
  }
}

void nesterov_update(float* value, float* velocity, const float* grad, std::size_t n, float lr,
                     float momentum) {
  const __m256 vlr = _mm256_set1_ps(lr);
  const __m256 vmu = _mm256_set1_ps(momentum);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 step = _mm256_mul_ps(vlr, _mm256_loadu_ps(grad + i));
    const __m256 v = _mm256_fmsub_ps(vmu, _mm256_loadu_ps(velocity + i), step);
    _mm256_storeu_ps(velocity + i, v);
    const __m256 x = _mm256_loadu_ps(value + i);
    _mm256_storeu_ps(value + i, _mm256_add_ps(x, _mm256_fmsub_ps(vmu, v, step)));
  }
  for (; i < n; ++i) {
    const float step = lr * grad[i];
    const float v = std::fma(momentum, velocity[i], -step);
    velocity[i] = v;
    value[i] += std::fma(momentum, v, -step);
  }
}

}  // namespace mlms::simd::avx2
