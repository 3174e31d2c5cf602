// SPDX-License-Identifier: Apache-2.0
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "mlms/simd/kernels.hpp"
#include "mlms/simd/scalar_kernels.hpp"

#if MLMS_HAVE_AVX2
#include "avx2_kernels.hpp"
#endif

namespace mlms::simd {
namespace {

bool cpu_has_avx2() {
#if MLMS_HAVE_AVX2 && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend initial_backend() {
  const Backend detected = detected_backend();
  if (const char* env = std::getenv("MLMS_SIMD")) {
    const std::string value(env);
    if (value == "scalar") return Backend::scalar;
    if (value == "avx2" && detected == Backend::avx2) return Backend::avx2;
  }
  return detected;
}

Backend& active() {
  static Backend backend = initial_backend();
  return backend;
}

}  // namespace

std::string_view backend_name(Backend backend) {
  switch (backend) {
    case Backend::scalar:
      return "scalar";
    case Backend::avx2:
      return "avx2";
  }
  return "unknown";
}

Backend detected_backend() {
  static const Backend detected = cpu_has_avx2() ? Backend::avx2 : Backend::scalar;
  return detected;
}

Backend active_backend() { return active(); }

void set_backend(Backend backend) {
  if (backend == Backend::avx2 && detected_backend() != Backend::avx2) {
    throw std::invalid_argument("avx2 backend is not available on this CPU or build");
  }
  active() = backend;
}

void gemm(Transpose trans_a, Transpose trans_b, std::size_t m, std::size_t n, std::size_t k,
          float alpha, const float* a, std::size_t lda, const float* b, std::size_t ldb,
          float beta, float* c, std::size_t ldc) {
#if MLMS_HAVE_AVX2
  if (active() == Backend::avx2) {
    avx2::gemm(trans_a, trans_b, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
    return;
  }
#endif
  scalar::gemm(trans_a, trans_b, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}

void gemm(Transpose trans_a, Transpose trans_b, std::size_t m, std::size_t n, std::size_t k,
          double alpha, const double* a, std::size_t lda, const double* b, std::size_t ldb,
          double beta, double* c, std::size_t ldc) {
  scalar::gemm(trans_a, trans_b, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}

void column_max(const float* x, std::size_t rows, std::size_t cols, float* out) {
#if MLMS_HAVE_AVX2
  if (active() == Backend::avx2) {
    avx2::column_max(x, rows, cols, out);
    return;
  }
#endif
  scalar::column_max(x, rows, cols, out);
}

void column_max(const double* x, std::size_t rows, std::size_t cols, double* out) {
  scalar::column_max(x, rows, cols, out);
}

void channel_affine(float* x, std::size_t rows, std::size_t cols, const float* scale,
                    const float* shift) {
#if MLMS_HAVE_AVX2
  if (active() == Backend::avx2) {
    avx2::channel_affine(x, rows, cols, scale, shift);
    return;
  }
#endif
  scalar::channel_affine(x, rows, cols, scale, shift);
}

void channel_affine(double* x, std::size_t rows, std::size_t cols, const double* scale,
                    const double* shift) {
  scalar::channel_affine(x, rows, cols, scale, shift);
}

void nesterov_update(float* value, float* velocity, const float* grad, std::size_t n, float lr,
                     float momentum) {
#if MLMS_HAVE_AVX2
  if (active() == Backend::avx2) {
    avx2::nesterov_update(value, velocity, grad, n, lr, momentum);
    return;
  }
#endif
  scalar::nesterov_update(value, velocity, grad, n, lr, momentum);
}

void nesterov_update(double* value, double* velocity, const double* grad, std::size_t n,
                     double lr, double momentum) {
  scalar::nesterov_update(value, velocity, grad, n, lr, momentum);
}

}  // namespace mlms::simd
