// SPDX-License-Identifier: Apache-2.0
#pragma once

// Forward/backward kernels for every layer type of the tagging networks.
// Sequence tensors are (N, T, C) or (T, C) and channel-last; feature tensors
// are (N, D). All functions are explicitly instantiated for float and double.

#include <cstdint>
#include <vector>

#include "mlms/nn/tensor.hpp"
#include "mlms/rng.hpp"

namespace mlms::nn {

enum class Mode { train, eval };

// ---- 1-D convolution, stride 1, same-length zero padding ------------------
// Padding is floor((k-1)/2) frames on the left and ceil((k-1)/2) on the right.

template <typename T>
struct ConvGrads {
  Tensor<T> input;
  Tensor<T> weights;
  Tensor<T> bias;
};

/// input (N, T, C_in) or (T, C_in); weights (k, C_in, C_out); bias (C_out).
/// When `columns` is non-null it receives the im2col matrix (N*T, k*C_in)
/// needed by conv1d_backward.
template <typename T>
Tensor<T> conv1d_forward(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& bias,
                         Tensor<T>* columns = nullptr);

template <typename T>
ConvGrads<T> conv1d_backward(const Tensor<T>& grad_out, const Tensor<T>& columns,
                             const Shape& input_shape, const Tensor<T>& weights);

// ---- max-pooling over time, stride = pool length ---------------------------

template <typename T>
struct PoolResult {
  Tensor<T> output;
  /// Flat input index of the selected (first) maximum for every output cell.
  std::vector<std::uint32_t> argmax;
};

template <typename T>
PoolResult<T> maxpool1d_forward(const Tensor<T>& input, std::size_t pool);

template <typename T>
Tensor<T> maxpool1d_backward(const Tensor<T>& grad_out, const std::vector<std::uint32_t>& argmax,
                             const Shape& input_shape);

// ---- batch normalisation over all non-channel axes -------------------------

template <typename T>
struct BatchNormState {
  BatchNormState() = default;
  BatchNormState(std::size_t channels, double momentum_, double epsilon_);

  Parameter<T> gamma;
  Parameter<T> beta;
  Tensor<T> running_mean;
  Tensor<T> running_var;
  double momentum = 0.99;
  double epsilon = 1e-5;
  /// Number of train-mode updates; 0 means the running statistics are unset.
  std::size_t updates = 0;

  std::size_t channels() const { return running_mean.size(); }
};

template <typename T>
struct BatchNormCache {
  Mode mode = Mode::eval;
  Tensor<T> normalized;       // x_hat
  std::vector<T> inv_std;     // per channel
};

/// Train mode normalises by biased batch statistics and folds them into the
/// running statistics (the first update copies them, later ones use the
/// exponential moving average with `momentum`). Eval mode uses the running
/// statistics and throws if they were never set.
template <typename T>
Tensor<T> batchnorm_forward(const Tensor<T>& input, BatchNormState<T>& state, Mode mode,
                            BatchNormCache<T>* cache = nullptr);

/// Accumulates into state.gamma.grad / state.beta.grad; returns grad_input.
template <typename T>
Tensor<T> batchnorm_backward(const Tensor<T>& grad_out, const BatchNormCache<T>& cache,
                             BatchNormState<T>& state);

// ---- pointwise activations --------------------------------------------------

template <typename T>
Tensor<T> relu_forward(const Tensor<T>& input);
template <typename T>
Tensor<T> relu_backward(const Tensor<T>& grad_out, const Tensor<T>& input);

template <typename T>
T sigmoid(T x);
template <typename T>
Tensor<T> sigmoid_forward(const Tensor<T>& input);
template <typename T>
Tensor<T> sigmoid_backward(const Tensor<T>& grad_out, const Tensor<T>& output);

/// Softmax over the last axis, max-subtracted.
template <typename T>
Tensor<T> softmax_forward(const Tensor<T>& input);
template <typename T>
Tensor<T> softmax_backward(const Tensor<T>& grad_out, const Tensor<T>& output);

// ---- fully connected --------------------------------------------------------

template <typename T>
struct DenseGrads {
  Tensor<T> input;
  Tensor<T> weights;
  Tensor<T> bias;
};

/// input (..., D); weights (D, U); bias (U) -> (..., U).
template <typename T>
Tensor<T> dense_forward(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& bias);
template <typename T>
DenseGrads<T> dense_backward(const Tensor<T>& grad_out, const Tensor<T>& input,
                             const Tensor<T>& weights);

// ---- inverted dropout -------------------------------------------------------

/// Train mode zeroes each element with probability `rate` and scales the
/// survivors by 1/(1-rate); `mask` receives the per-element scale. Eval mode
/// and rate == 0 return the input unchanged.
template <typename T>
Tensor<T> dropout_forward(const Tensor<T>& input, double rate, Mode mode, Rng* rng,
                          std::vector<T>* mask = nullptr);
template <typename T>
Tensor<T> dropout_backward(const Tensor<T>& grad_out, const std::vector<T>& mask);

// ---- losses -----------------------------------------------------------------

template <typename T>
struct LossResult {
  double loss = 0.0;
  Tensor<T> grad;  // w.r.t. logits
};

/// Mean binary cross-entropy of sigmoid(logits) against {0,1} targets,
/// computed in the log-sum-exp stable form. grad = (p - y) / (N * L).
template <typename T>
LossResult<T> bce_with_logits(const Tensor<T>& logits, const Tensor<T>& targets);

/// Mean BCE on probabilities, clamped to [1e-7, 1 - 1e-7].
template <typename T>
double bce_loss(const Tensor<T>& probabilities, const Tensor<T>& targets);

/// Mean negative log-softmax probability of the target class.
template <typename T>
LossResult<T> softmax_cross_entropy(const Tensor<T>& logits,
                                    const std::vector<std::uint32_t>& classes);

}  // namespace mlms::nn
