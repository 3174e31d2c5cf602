// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>

#include "mlms/nn/tensor.hpp"

namespace mlms::nn {

/// SGD with Nesterov momentum, in the form most frameworks implement:
///   v <- mu * v - lr * g;  value <- value + mu * v - lr * g
/// Gradients are zeroed afterwards.
template <typename T>
void sgd_nesterov_step(std::span<Parameter<T>* const> params, double lr, double momentum = 0.9);

}  // namespace mlms::nn
