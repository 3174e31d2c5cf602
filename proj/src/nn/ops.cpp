// SPDX-License-Identifier: Apache-2.0
#include "mlms/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "mlms/error.hpp"
#include "mlms/simd/kernels.hpp"

namespace mlms::nn {

std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << ", ";
    out << shape[i];
  }
  out << ')';
  return out.str();
}

namespace {

struct SeqDims {
  std::size_t batch;
  std::size_t time;
  std::size_t channels;
};

SeqDims sequence_dims(const Shape& shape, const char* what) {
  if (shape.size() == 2) return {1, shape[0], shape[1]};
  if (shape.size() == 3) return {shape[0], shape[1], shape[2]};
  throw UserError(std::string(what) + ": expected (N, T, C) or (T, C), got " +
                  shape_string(shape));
}

Shape with_last(const Shape& shape, std::size_t last) {
  Shape out = shape;
  out.back() = last;
  return out;
}

template <typename T>
Tensor<T> column_sums(const Tensor<T>& x) {
  const std::size_t cols = x.last_dim();
  const std::size_t rows = x.rows();
  std::vector<double> acc(cols, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* row = x.data() + r * cols;
    for (std::size_t c = 0; c < cols; ++c) acc[c] += row[c];
  }
  Tensor<T> out({cols});
  for (std::size_t c = 0; c < cols; ++c) out[c] = static_cast<T>(acc[c]);
  return out;
}

}  // namespace

// ---- conv1d -----------------------------------------------------------------

template <typename T>
Tensor<T> conv1d_forward(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& bias,
                         Tensor<T>* columns) {
  const SeqDims d = sequence_dims(input.shape(), "conv1d");
  if (weights.rank() != 3) throw UserError("conv1d: weights must be (k, C_in, C_out)");
  const std::size_t k = weights.dim(0);
  const std::size_t c_out = weights.dim(2);
  if (weights.dim(1) != d.channels) {
    throw UserError("conv1d: channel mismatch, input has " + std::to_string(d.channels) +
                    " channels, weights expect " + std::to_string(weights.dim(1)));
  }
  if (bias.size() != c_out) throw UserError("conv1d: bias length must equal filter count");

  const std::size_t pad_left = (k - 1) / 2;
  const std::size_t width = k * d.channels;
  const std::size_t rows = d.batch * d.time;

  Tensor<T> cols({rows, width});
  for (std::size_t n = 0; n < d.batch; ++n) {
    const T* src = input.data() + n * d.time * d.channels;
    for (std::size_t t = 0; t < d.time; ++t) {
      T* dst = cols.data() + (n * d.time + t) * width;
      for (std::size_t tap = 0; tap < k; ++tap) {
        const std::ptrdiff_t s = static_cast<std::ptrdiff_t>(t + tap) -
                                 static_cast<std::ptrdiff_t>(pad_left);
        if (s >= 0 && s < static_cast<std::ptrdiff_t>(d.time)) {
          std::copy_n(src + static_cast<std::size_t>(s) * d.channels, d.channels,
                      dst + tap * d.channels);
        }
      }
    }
  }

  Tensor<T> out(with_last(input.shape(), c_out));
  simd::gemm(simd::Transpose::no, simd::Transpose::no, rows, c_out, width, T(1), cols.data(),
             width, weights.data(), c_out, T(0), out.data(), c_out);
  for (std::size_t r = 0; r < rows; ++r) {
    T* row = out.data() + r * c_out;
    for (std::size_t o = 0; o < c_out; ++o) row[o] += bias[o];
  }
  if (columns) *columns = std::move(cols);
  return out;
}

template <typename T>
ConvGrads<T> conv1d_backward(const Tensor<T>& grad_out, const Tensor<T>& columns,
                             const Shape& input_shape, const Tensor<T>& weights) {
  const SeqDims d = sequence_dims(input_shape, "conv1d_backward");
  const std::size_t k = weights.dim(0);
  const std::size_t c_out = weights.dim(2);
  const std::size_t width = k * d.channels;
  const std::size_t rows = d.batch * d.time;
  if (grad_out.size() != rows * c_out || columns.size() != rows * width ||
      weights.dim(1) != d.channels) {
    throw UserError("conv1d_backward: shape mismatch (grad " + shape_string(grad_out.shape()) +
                    ", input " + shape_string(input_shape) + ")");
  }

  ConvGrads<T> g{Tensor<T>(input_shape), Tensor<T>(weights.shape()), column_sums(grad_out)};
  simd::gemm(simd::Transpose::yes, simd::Transpose::no, width, c_out, rows, T(1), columns.data(),
             width, grad_out.data(), c_out, T(0), g.weights.data(), c_out);

  Tensor<T> dcols({rows, width});
  simd::gemm(simd::Transpose::no, simd::Transpose::yes, rows, width, c_out, T(1),
             grad_out.data(), c_out, weights.data(), c_out, T(0), dcols.data(), width);

  const std::size_t pad_left = (k - 1) / 2;
  for (std::size_t n = 0; n < d.batch; ++n) {
    T* dst = g.input.data() + n * d.time * d.channels;
    for (std::size_t t = 0; t < d.time; ++t) {
      const T* src = dcols.data() + (n * d.time + t) * width;
      for (std::size_t tap = 0; tap < k; ++tap) {
        const std::ptrdiff_t s = static_cast<std::ptrdiff_t>(t + tap) -
                                 static_cast<std::ptrdiff_t>(pad_left);
        if (s < 0 || s >= static_cast<std::ptrdiff_t>(d.time)) continue;
        T* o = dst + static_cast<std::size_t>(s) * d.channels;
        const T* v = src + tap * d.channels;
        for (std::size_t c = 0; c < d.channels; ++c) o[c] += v[c];
      }
    }
  }
  return g;
}

// ---- maxpool1d --------------------------------------------------------------

template <typename T>
PoolResult<T> maxpool1d_forward(const Tensor<T>& input, std::size_t pool) {
  const SeqDims d = sequence_dims(input.shape(), "maxpool1d");
  if (pool == 0) throw UserError("maxpool1d: pool length must be >= 1");
  if (d.time < pool) {
    throw UserError("maxpool1d: input length " + std::to_string(d.time) +
                    " is shorter than pool length " + std::to_string(pool));
  }
  const std::size_t out_time = d.time / pool;
  Shape out_shape = input.shape();
  out_shape[out_shape.size() - 2] = out_time;

  PoolResult<T> r{Tensor<T>(out_shape), std::vector<std::uint32_t>(shape_size(out_shape))};
  for (std::size_t n = 0; n < d.batch; ++n) {
    for (std::size_t to = 0; to < out_time; ++to) {
      const std::size_t first = (n * d.time + to * pool) * d.channels;
      const std::size_t out_base = (n * out_time + to) * d.channels;
      for (std::size_t c = 0; c < d.channels; ++c) {
        std::size_t best = first + c;
        for (std::size_t j = 1; j < pool; ++j) {
          const std::size_t idx = first + j * d.channels + c;
          if (input[idx] > input[best]) best = idx;
        }
        r.output[out_base + c] = input[best];
        r.argmax[out_base + c] = static_cast<std::uint32_t>(best);
      }
    }
  }
  return r;
}

template <typename T>
Tensor<T> maxpool1d_backward(const Tensor<T>& grad_out, const std::vector<std::uint32_t>& argmax,
                             const Shape& input_shape) {
  if (argmax.size() != grad_out.size()) {
    throw UserError("maxpool1d_backward: stale argmax cache (" + std::to_string(argmax.size()) +
                    " entries for gradient " + shape_string(grad_out.shape()) + ")");
  }
  Tensor<T> grad_in(input_shape);
  for (std::size_t i = 0; i < argmax.size(); ++i) {
    if (argmax[i] >= grad_in.size()) throw UserError("maxpool1d_backward: stale argmax cache");
    grad_in[argmax[i]] += grad_out[i];
  }
  return grad_in;
}

// ---- batchnorm --------------------------------------------------------------

template <typename T>
BatchNormState<T>::BatchNormState(std::size_t channels, double momentum_, double epsilon_)
    : gamma(Tensor<T>({channels}, T(1))),
      beta(Tensor<T>({channels}, T(0))),
      running_mean({channels}, T(0)),
      running_var({channels}, T(1)),
      momentum(momentum_),
      epsilon(epsilon_) {
  if (!(epsilon > 0.0)) throw UserError("batchnorm: epsilon must be positive");
}

template <typename T>
Tensor<T> batchnorm_forward(const Tensor<T>& input, BatchNormState<T>& state, Mode mode,
                            BatchNormCache<T>* cache) {
  const std::size_t channels = input.last_dim();
  if (channels != state.channels()) {
    throw UserError("batchnorm: input has " + std::to_string(channels) + " channels, state has " +
                    std::to_string(state.channels()));
  }
  const std::size_t rows = input.rows();

  std::vector<double> mean(channels, 0.0);
  std::vector<double> var(channels, 0.0);
  if (mode == Mode::train) {
    if (rows < 2) throw UserError("batchnorm: train mode needs at least 2 samples per channel");
    for (std::size_t r = 0; r < rows; ++r) {
      const T* row = input.data() + r * channels;
      for (std::size_t c = 0; c < channels; ++c) mean[c] += row[c];
    }
    for (double& m : mean) m /= static_cast<double>(rows);
    for (std::size_t r = 0; r < rows; ++r) {
      const T* row = input.data() + r * channels;
      for (std::size_t c = 0; c < channels; ++c) {
        const double dv = row[c] - mean[c];
        var[c] += dv * dv;
      }
    }
    for (double& v : var) v /= static_cast<double>(rows);

    const double keep = state.momentum;
    for (std::size_t c = 0; c < channels; ++c) {
      if (state.updates == 0) {
        state.running_mean[c] = static_cast<T>(mean[c]);
        state.running_var[c] = static_cast<T>(var[c]);
      } else {
        state.running_mean[c] =
            static_cast<T>(keep * state.running_mean[c] + (1.0 - keep) * mean[c]);
        state.running_var[c] =
            static_cast<T>(keep * state.running_var[c] + (1.0 - keep) * var[c]);
      }
    }
    ++state.updates;
  } else {
    if (state.updates == 0) {
      throw UserError("batchnorm: eval mode before any training update (running statistics unset)");
    }
    for (std::size_t c = 0; c < channels; ++c) {
      mean[c] = state.running_mean[c];
      var[c] = state.running_var[c];
    }
  }

  std::vector<T> inv_std(channels);
  std::vector<T> scale(channels);
  std::vector<T> shift(channels);
  for (std::size_t c = 0; c < channels; ++c) {
    const double is = 1.0 / std::sqrt(var[c] + state.epsilon);
    inv_std[c] = static_cast<T>(is);
    scale[c] = static_cast<T>(state.gamma.value[c] * is);
    shift[c] = static_cast<T>(state.beta.value[c] - mean[c] * state.gamma.value[c] * is);
  }

  Tensor<T> out = input;
  simd::channel_affine(out.data(), rows, channels, scale.data(), shift.data());

  if (cache) {
    cache->mode = mode;
    cache->normalized = Tensor<T>(input.shape());
    for (std::size_t r = 0; r < rows; ++r) {
      const T* row = input.data() + r * channels;
      T* xh = cache->normalized.data() + r * channels;
      for (std::size_t c = 0; c < channels; ++c) {
        xh[c] = static_cast<T>((row[c] - mean[c]) * inv_std[c]);
      }
    }
    cache->inv_std = std::move(inv_std);
  }
  return out;
}

template <typename T>
Tensor<T> batchnorm_backward(const Tensor<T>& grad_out, const BatchNormCache<T>& cache,
                             BatchNormState<T>& state) {
  const std::size_t channels = grad_out.last_dim();
  const std::size_t rows = grad_out.rows();
  if (cache.normalized.shape() != grad_out.shape() || channels != state.channels()) {
    throw UserError("batchnorm_backward: shape mismatch");
  }
  std::vector<double> sum_dy(channels, 0.0);
  std::vector<double> sum_dy_xhat(channels, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* dy = grad_out.data() + r * channels;
    const T* xh = cache.normalized.data() + r * channels;
    for (std::size_t c = 0; c < channels; ++c) {
      sum_dy[c] += dy[c];
      sum_dy_xhat[c] += static_cast<double>(dy[c]) * xh[c];
    }
  }
  for (std::size_t c = 0; c < channels; ++c) {
    state.gamma.grad[c] += static_cast<T>(sum_dy_xhat[c]);
    state.beta.grad[c] += static_cast<T>(sum_dy[c]);
  }

  Tensor<T> grad_in(grad_out.shape());
  const double inv_rows = 1.0 / static_cast<double>(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* dy = grad_out.data() + r * channels;
    const T* xh = cache.normalized.data() + r * channels;
    T* dx = grad_in.data() + r * channels;
    for (std::size_t c = 0; c < channels; ++c) {
      const double g = static_cast<double>(state.gamma.value[c]) * cache.inv_std[c];
      if (cache.mode == Mode::train) {
        dx[c] = static_cast<T>(g * (dy[c] - sum_dy[c] * inv_rows -
                                    xh[c] * sum_dy_xhat[c] * inv_rows));
      } else {
        dx[c] = static_cast<T>(g * dy[c]);
      }
    }
  }
  return grad_in;
}

// ---- activations ------------------------------------------------------------

template <typename T>
Tensor<T> relu_forward(const Tensor<T>& input) {
  Tensor<T> out = input;
  for (T& v : out.storage()) v = v > T(0) ? v : T(0);
  return out;
}

template <typename T>
Tensor<T> relu_backward(const Tensor<T>& grad_out, const Tensor<T>& input) {
  if (grad_out.shape() != input.shape()) throw UserError("relu_backward: shape mismatch");
  Tensor<T> g = grad_out;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!(input[i] > T(0))) g[i] = T(0);
  }
  return g;
}

template <typename T>
T sigmoid(T x) {
  // Clamped to the open interval so saturated logits never report 0 or 1.
  constexpr T lo = std::numeric_limits<T>::min();
  const T hi = std::nextafter(T(1), T(0));
  T y;
  if (x >= T(0)) {
    y = T(1) / (T(1) + std::exp(-x));
  } else {
    const T e = std::exp(x);
    y = e / (T(1) + e);
  }
  return std::clamp(y, lo, hi);
}

template <typename T>
Tensor<T> sigmoid_forward(const Tensor<T>& input) {
  Tensor<T> out = input;
  for (T& v : out.storage()) v = sigmoid(v);
  return out;
}

template <typename T>
Tensor<T> sigmoid_backward(const Tensor<T>& grad_out, const Tensor<T>& output) {
  if (grad_out.shape() != output.shape()) throw UserError("sigmoid_backward: shape mismatch");
  Tensor<T> g = grad_out;
  for (std::size_t i = 0; i < g.size(); ++i) g[i] *= output[i] * (T(1) - output[i]);
  return g;
}

template <typename T>
Tensor<T> softmax_forward(const Tensor<T>& input) {
  Tensor<T> out = input;
  const std::size_t cols = input.last_dim();
  for (std::size_t r = 0; r < input.rows(); ++r) {
    T* row = out.data() + r * cols;
    const T mx = *std::max_element(row, row + cols);
    double sum = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      row[c] = std::exp(row[c] - mx);
      sum += row[c];
    }
    for (std::size_t c = 0; c < cols; ++c) row[c] = static_cast<T>(row[c] / sum);
  }
  return out;
}

template <typename T>
Tensor<T> softmax_backward(const Tensor<T>& grad_out, const Tensor<T>& output) {
  if (grad_out.shape() != output.shape()) throw UserError("softmax_backward: shape mismatch");
  Tensor<T> g(grad_out.shape());
  const std::size_t cols = output.last_dim();
  for (std::size_t r = 0; r < output.rows(); ++r) {
    const T* y = output.data() + r * cols;
    const T* dy = grad_out.data() + r * cols;
    double dot = 0.0;
    for (std::size_t c = 0; c < cols; ++c) dot += static_cast<double>(dy[c]) * y[c];
    for (std::size_t c = 0; c < cols; ++c) {
      g[r * cols + c] = static_cast<T>(y[c] * (dy[c] - dot));
    }
  }
  return g;
}

// ---- dense ------------------------------------------------------------------

template <typename T>
Tensor<T> dense_forward(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& bias) {
  if (weights.rank() != 2 || input.last_dim() != weights.dim(0)) {
    throw UserError("dense: input " + shape_string(input.shape()) + " does not match weights " +
                    shape_string(weights.shape()));
  }
  const std::size_t units = weights.dim(1);
  if (bias.size() != units) throw UserError("dense: bias length must equal unit count");
  const std::size_t rows = input.rows();
  const std::size_t in_dim = input.last_dim();

  Tensor<T> out(with_last(input.shape(), units));
  simd::gemm(simd::Transpose::no, simd::Transpose::no, rows, units, in_dim, T(1), input.data(),
             in_dim, weights.data(), units, T(0), out.data(), units);
  for (std::size_t r = 0; r < rows; ++r) {
    T* row = out.data() + r * units;
    for (std::size_t u = 0; u < units; ++u) row[u] += bias[u];
  }
  return out;
}

template <typename T>
DenseGrads<T> dense_backward(const Tensor<T>& grad_out, const Tensor<T>& input,
                             const Tensor<T>& weights) {
  const std::size_t rows = input.rows();
  const std::size_t in_dim = input.last_dim();
  const std::size_t units = weights.dim(1);
  if (grad_out.rows() != rows || grad_out.last_dim() != units || weights.dim(0) != in_dim) {
    throw UserError("dense_backward: shape mismatch");
  }
  DenseGrads<T> g{Tensor<T>(input.shape()), Tensor<T>(weights.shape()), column_sums(grad_out)};
  simd::gemm(simd::Transpose::yes, simd::Transpose::no, in_dim, units, rows, T(1), input.data(),
             in_dim, grad_out.data(), units, T(0), g.weights.data(), units);
  simd::gemm(simd::Transpose::no, simd::Transpose::yes, rows, in_dim, units, T(1),
             grad_out.data(), units, weights.data(), units, T(0), g.input.data(), in_dim);
  return g;
}

// ---- dropout ----------------------------------------------------------------

template <typename T>
Tensor<T> dropout_forward(const Tensor<T>& input, double rate, Mode mode, Rng* rng,
                          std::vector<T>* mask) {
  if (!(rate >= 0.0 && rate < 1.0)) throw UserError("dropout: rate must be in [0, 1)");
  if (mode == Mode::eval || rate == 0.0) {
    if (mask) mask->assign(input.size(), T(1));
    return input;
  }
  if (!rng) throw UserError("dropout: train mode needs a random stream");
  const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
  std::vector<T> m(input.size());
  Tensor<T> out = input;
  for (std::size_t i = 0; i < out.size(); ++i) {
    m[i] = rng->uniform() < rate ? T(0) : keep_scale;
    out[i] *= m[i];
  }
  if (mask) *mask = std::move(m);
  return out;
}

template <typename T>
Tensor<T> dropout_backward(const Tensor<T>& grad_out, const std::vector<T>& mask) {
  if (mask.size() != grad_out.size()) throw UserError("dropout_backward: stale mask");
  Tensor<T> g = grad_out;
  for (std::size_t i = 0; i < g.size(); ++i) g[i] *= mask[i];
  return g;
}

// ---- losses -----------------------------------------------------------------

template <typename T>
LossResult<T> bce_with_logits(const Tensor<T>& logits, const Tensor<T>& targets) {
  if (logits.shape() != targets.shape()) {
    throw UserError("bce: logits " + shape_string(logits.shape()) + " vs targets " +
                    shape_string(targets.shape()));
  }
  const double count = static_cast<double>(logits.size());
  LossResult<T> r{0.0, Tensor<T>(logits.shape())};
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double y = targets[i];
    if (y != 0.0 && y != 1.0) throw UserError("bce: targets must be 0 or 1");
    const double z = logits[i];
    total += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
    const double p = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
    r.grad[i] = static_cast<T>((p - y) / count);
  }
  r.loss = total / count;
  return r;
}

template <typename T>
double bce_loss(const Tensor<T>& probabilities, const Tensor<T>& targets) {
  if (probabilities.shape() != targets.shape()) throw UserError("bce: shape mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    const double y = targets[i];
    if (y != 0.0 && y != 1.0) throw UserError("bce: targets must be 0 or 1");
    const double p = std::clamp(static_cast<double>(probabilities[i]), 1e-7, 1.0 - 1e-7);
    total -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
  }
  return total / static_cast<double>(probabilities.size());
}

template <typename T>
LossResult<T> softmax_cross_entropy(const Tensor<T>& logits,
                                    const std::vector<std::uint32_t>& classes) {
  const std::size_t k = logits.last_dim();
  const std::size_t rows = logits.rows();
  if (classes.size() != rows) throw UserError("cross_entropy: one target per row required");
  LossResult<T> r{0.0, Tensor<T>(logits.shape())};
  double total = 0.0;
  for (std::size_t n = 0; n < rows; ++n) {
    if (classes[n] >= k) {
      throw UserError("cross_entropy: target class " + std::to_string(classes[n]) +
                      " out of range [0, " + std::to_string(k) + ")");
    }
    const T* z = logits.data() + n * k;
    const double mx = *std::max_element(z, z + k);
    double sum = 0.0;
    for (std::size_t c = 0; c < k; ++c) sum += std::exp(z[c] - mx);
    const double lse = mx + std::log(sum);
    total += lse - z[classes[n]];
    for (std::size_t c = 0; c < k; ++c) {
      const double p = std::exp(z[c] - lse);
      r.grad[n * k + c] =
          static_cast<T>((p - (c == classes[n] ? 1.0 : 0.0)) / static_cast<double>(rows));
    }
  }
  r.loss = total / static_cast<double>(rows);
  return r;
}

// ---- instantiations ---------------------------------------------------------

#define MLMS_INSTANTIATE_OPS(T)                                                                 \
  template Tensor<T> conv1d_forward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,       \
                                    Tensor<T>*);                                                \
  template ConvGrads<T> conv1d_backward(const Tensor<T>&, const Tensor<T>&, const Shape&,       \
                                        const Tensor<T>&);                                      \
  template PoolResult<T> maxpool1d_forward(const Tensor<T>&, std::size_t);                      \
  template Tensor<T> maxpool1d_backward(const Tensor<T>&, const std::vector<std::uint32_t>&,    \
                                        const Shape&);                                          \
  template struct BatchNormState<T>;                                                            \
  template Tensor<T> batchnorm_forward(const Tensor<T>&, BatchNormState<T>&, Mode,              \
                                       BatchNormCache<T>*);                                     \
  template Tensor<T> batchnorm_backward(const Tensor<T>&, const BatchNormCache<T>&,             \
                                        BatchNormState<T>&);                                    \
  template Tensor<T> relu_forward(const Tensor<T>&);                                            \
  template Tensor<T> relu_backward(const Tensor<T>&, const Tensor<T>&);                         \
  template T sigmoid(T);                                                                        \
  template Tensor<T> sigmoid_forward(const Tensor<T>&);                                         \
  template Tensor<T> sigmoid_backward(const Tensor<T>&, const Tensor<T>&);                      \
  template Tensor<T> softmax_forward(const Tensor<T>&);                                         \
  template Tensor<T> softmax_backward(const Tensor<T>&, const Tensor<T>&);                      \
  template Tensor<T> dense_forward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);       \
  template DenseGrads<T> dense_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);  \
  template Tensor<T> dropout_forward(const Tensor<T>&, double, Mode, Rng*, std::vector<T>*);    \
  template Tensor<T> dropout_backward(const Tensor<T>&, const std::vector<T>&);                 \
  template LossResult<T> bce_with_logits(const Tensor<T>&, const Tensor<T>&);                   \
  template double bce_loss(const Tensor<T>&, const Tensor<T>&);                                 \
  template LossResult<T> softmax_cross_entropy(const Tensor<T>&,                                \
                                               const std::vector<std::uint32_t>&);

MLMS_INSTANTIATE_OPS(float)
MLMS_INSTANTIATE_OPS(double)

#undef MLMS_INSTANTIATE_OPS

}  // namespace mlms::nn
