// SPDX-License-Identifier: Apache-2.0
#include "mlms/nn/optimizer.hpp"

#include "mlms/simd/kernels.hpp"

namespace mlms::nn {

template <typename T>
void sgd_nesterov_step(std::span<Parameter<T>* const> params, double lr, double momentum) {
  for (Parameter<T>* p : params) {
    simd::nesterov_update(p->value.data(), p->velocity.data(), p->grad.data(), p->value.size(),
                          static_cast<T>(lr), static_cast<T>(momentum));
    p->zero_grad();
  }
}

template void sgd_nesterov_step<float>(std::span<Parameter<float>* const>, double, double);
template void sgd_nesterov_step<double>(std::span<Parameter<double>* const>, double, double);

}  // namespace mlms::nn
