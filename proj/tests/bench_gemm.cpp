#include <chrono>
#include <cstdio>
#include <vector>
#include <random>
#include <tuple>
#include <string>
#include "mlms/simd/kernels.hpp"
using namespace mlms::simd;
int main() {
  for (auto be : {Backend::scalar, Backend::avx2}) {
    set_backend(be);
    using Case = std::tuple<int,int,int,Transpose,Transpose>;
    for (auto [m, n, k, ta, tb] : {Case{1728, 128, 384, Transpose::no, Transpose::no},
                                   Case{384, 128, 1728, Transpose::yes, Transpose::no},
                                   Case{1728, 384, 128, Transpose::no, Transpose::yes}}) {
      std::vector<float> a(m * k), b(k * n), c(m * n);
      std::mt19937 g(1); std::uniform_real_distribution<float> d(-1, 1);
      for (auto& x : a) x = d(g); for (auto& x : b) x = d(g);
      int reps = be == Backend::scalar ? 3 : 30;
      auto t0 = std::chrono::steady_clock::now();
      for (int r = 0; r < reps; ++r)
        gemm(ta, tb, m, n, k, 1.f, a.data(), ta == Transpose::no ? k : m, b.data(), tb == Transpose::no ? n : k, 0.f, c.data(), n);
      double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      std::printf("%s m=%d n=%d k=%d: %.2f GFLOP/s\n", std::string(backend_name(be)).c_str(), m, n, k, 2.0 * m * n * k * reps / s / 1e9);
    }
  }
}
