// SPDX-License-Identifier: Apache-2.0
#include "mlms/nn/layers.hpp"

#include <cmath>

#include "mlms/error.hpp"

namespace mlms::nn {

using json = nlohmann::ordered_json;

std::string to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::conv1d: return "conv1d";
    case LayerKind::maxpool1d: return "maxpool1d";
    case LayerKind::batchnorm: return "batchnorm";
    case LayerKind::relu: return "relu";
    case LayerKind::dense: return "dense";
    case LayerKind::dropout: return "dropout";
    case LayerKind::sigmoid: return "sigmoid";
    case LayerKind::softmax: return "softmax";
    case LayerKind::flatten: return "flatten";
  }
  return "unknown";
}

LayerKind layer_kind_from_string(const std::string& name) {
  for (const LayerKind k : {LayerKind::conv1d, LayerKind::maxpool1d, LayerKind::batchnorm,
                            LayerKind::relu, LayerKind::dense, LayerKind::dropout,
                            LayerKind::sigmoid, LayerKind::softmax, LayerKind::flatten}) {
    if (to_string(k) == name) return k;
  }
  throw DataError("unknown layer kind '" + name + "'");
}

LayerConfig LayerConfig::conv1d(std::size_t in_channels, std::size_t filter_length,
                                std::size_t filters) {
  LayerConfig c;
  c.kind = LayerKind::conv1d;
  c.in_channels = in_channels;
  c.filter_length = filter_length;
  c.filters = filters;
  return c;
}

LayerConfig LayerConfig::maxpool1d(std::size_t pool_length) {
  LayerConfig c;
  c.kind = LayerKind::maxpool1d;
  c.pool_length = pool_length;
  return c;
}

LayerConfig LayerConfig::batchnorm(std::size_t channels, double momentum, double epsilon) {
  LayerConfig c;
  c.kind = LayerKind::batchnorm;
  c.in_channels = channels;
  c.bn_momentum = momentum;
  c.bn_epsilon = epsilon;
  return c;
}

LayerConfig LayerConfig::dense(std::size_t in_features, std::size_t units) {
  LayerConfig c;
  c.kind = LayerKind::dense;
  c.in_channels = in_features;
  c.filters = units;
  return c;
}

LayerConfig LayerConfig::dropout(double rate) {
  LayerConfig c;
  c.kind = LayerKind::dropout;
  c.dropout_rate = rate;
  return c;
}

LayerConfig LayerConfig::simple(LayerKind kind) {
  LayerConfig c;
  c.kind = kind;
  return c;
}

void LayerConfig::validate() const {
  switch (kind) {
    case LayerKind::conv1d:
      if (filter_length < 1 || filters < 1 || in_channels < 1) {
        throw UserError("conv1d: filter length, filter count and input channels must be >= 1");
      }
      break;
    case LayerKind::maxpool1d:
      if (pool_length < 1) throw UserError("maxpool1d: pool length must be >= 1");
      break;
    case LayerKind::batchnorm:
      if (in_channels < 1) throw UserError("batchnorm: channel count must be >= 1");
      if (!(bn_epsilon > 0.0)) throw UserError("batchnorm: epsilon must be positive");
      if (!(bn_momentum >= 0.0 && bn_momentum < 1.0)) {
        throw UserError("batchnorm: momentum must be in [0, 1)");
      }
      break;
    case LayerKind::dense:
      if (in_channels < 1 || filters < 1) throw UserError("dense: dimensions must be >= 1");
      break;
    case LayerKind::dropout:
      if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
        throw UserError("dropout: rate must be in [0, 1)");
      }
      break;
    default:
      break;
  }
}

json LayerConfig::to_json() const {
  json j;
  j["kind"] = to_string(kind);
  switch (kind) {
    case LayerKind::conv1d:
      j["in_channels"] = in_channels;
      j["filter_length"] = filter_length;
      j["filters"] = filters;
      break;
    case LayerKind::maxpool1d:
      j["pool_length"] = pool_length;
      break;
    case LayerKind::batchnorm:
      j["channels"] = in_channels;
      j["momentum"] = bn_momentum;
      j["epsilon"] = bn_epsilon;
      break;
    case LayerKind::dense:
      j["in_features"] = in_channels;
      j["units"] = filters;
      break;
    case LayerKind::dropout:
      j["rate"] = dropout_rate;
      break;
    default:
      break;
  }
  return j;
}

LayerConfig LayerConfig::from_json(const json& j) {
  try {
    LayerConfig c;
    c.kind = layer_kind_from_string(j.at("kind").get<std::string>());
    switch (c.kind) {
      case LayerKind::conv1d:
        c.in_channels = j.at("in_channels").get<std::size_t>();
        c.filter_length = j.at("filter_length").get<std::size_t>();
        c.filters = j.at("filters").get<std::size_t>();
        break;
      case LayerKind::maxpool1d:
        c.pool_length = j.at("pool_length").get<std::size_t>();
        break;
      case LayerKind::batchnorm:
        c.in_channels = j.at("channels").get<std::size_t>();
        c.bn_momentum = j.at("momentum").get<double>();
        c.bn_epsilon = j.at("epsilon").get<double>();
        break;
      case LayerKind::dense:
        c.in_channels = j.at("in_features").get<std::size_t>();
        c.filters = j.at("units").get<std::size_t>();
        break;
      case LayerKind::dropout:
        c.dropout_rate = j.at("rate").get<double>();
        break;
      default:
        break;
    }
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed layer description: ") + e.what());
  }
}

namespace {

std::uint64_t fnv_bytes(std::uint64_t h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

template <typename T>
Tensor<T> he_uniform(Shape shape, std::size_t fan_in, Rng* init) {
  Tensor<T> w(std::move(shape));
  if (!init) return w;
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  for (T& v : w.storage()) v = static_cast<T>(init->uniform(-bound, bound));
  return w;
}

template <typename T>
class Conv1dLayer final : public Layer<T> {
 public:
  Conv1dLayer(const LayerConfig& c, Rng* init)
      : Layer<T>(c),
        weights_(he_uniform<T>({c.filter_length, c.in_channels, c.filters},
                               c.filter_length * c.in_channels, init)),
        bias_(Tensor<T>({c.filters})) {}

  Tensor<T> forward(const Tensor<T>& input, Mode) override {
    input_shape_ = input.shape();
    return conv1d_forward(input, weights_.value, bias_.value, &columns_);
  }
  Tensor<T> backward(const Tensor<T>& grad_out) override {
    ConvGrads<T> g = conv1d_backward(grad_out, columns_, input_shape_, weights_.value);
    accumulate(weights_.grad, g.weights);
    accumulate(bias_.grad, g.bias);
    return std::move(g.input);
  }
  std::vector<Parameter<T>*> parameters() override { return {&weights_, &bias_}; }
  std::vector<NamedTensor<T>> state() override {
    return {{"weights", &weights_.value}, {"bias", &bias_.value}};
  }
  std::unique_ptr<Layer<T>> clone() const override {
    return std::make_unique<Conv1dLayer>(*this);
  }

 private:
  static void accumulate(Tensor<T>& dst, const Tensor<T>& src) {
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  }
  Parameter<T> weights_;
  Parameter<T> bias_;
  Tensor<T> columns_;
  Shape input_shape_;
};

template <typename T>
class MaxPoolLayer final : public Layer<T> {
 public:
  explicit MaxPoolLayer(const LayerConfig& c) : Layer<T>(c) {}
  Tensor<T> forward(const Tensor<T>& input, Mode) override {
    input_shape_ = input.shape();
    PoolResult<T> r = maxpool1d_forward(input, this->config_.pool_length);
    argmax_ = std::move(r.argmax);
    return std::move(r.output);
  }
  Tensor<T> backward(const Tensor<T>& grad_out) override {
    return maxpool1d_backward(grad_out, argmax_, input_shape_);
  }
  std::uint64_t kink_signature() const override {
    return fnv_bytes(0xcbf29ce484222325ULL, argmax_.data(), argmax_.size() * sizeof(argmax_[0]));
  }
  std::unique_ptr<Layer<T>> clone() const override {
    return std::make_unique<MaxPoolLayer>(*this);
  }

 private:
  std::vector<std::uint32_t> argmax_;
  Shape input_shape_;
};

template <typename T>
class BatchNormLayer final : public Layer<T> {
 public:
  BatchNormLayer(const LayerConfig& c, std::size_t updates)
      : Layer<T>(c), state_(c.in_channels, c.bn_momentum, c.bn_epsilon) {
    state_.updates = updates;
  }
  Tensor<T> forward(const Tensor<T>& input, Mode mode) override {
    return batchnorm_forward(input, state_, mode, &cache_);
  }
  Tensor<T> backward(const Tensor<T>& grad_out) override {
    return batchnorm_backward(grad_out, cache_, state_);
  }
  std::vector<Parameter<T>*> parameters() override { return {&state_.gamma, &state_.beta}; }
  std::vector<NamedTensor<T>> state() override {
    return {{"gamma", &state_.gamma.value},
            {"beta", &state_.beta.value},
            {"running_mean", &state_.running_mean},
            {"running_var", &state_.running_var}};
  }
  json describe() const override {
    json j = this->config_.to_json();
    j["updates"] = state_.updates;
    return j;
  }
  std::unique_ptr<Layer<T>> clone() const override {
    return std::make_unique<BatchNormLayer>(*this);
  }

 private:
  BatchNormState<T> state_;
  BatchNormCache<T> cache_;
};

template <typename T>
class ReluLayer final : public Layer<T> {
 public:
  explicit ReluLayer(const LayerConfig& c) : Layer<T>(c) {}
  Tensor<T> forward(const Tensor<T>& input, Mode) override {
    input_ = input;
    return relu_forward(input);
  }
  Tensor<T> backward(const Tensor<T>& grad_out) override { return relu_backward(grad_out, input_); }
  std::uint64_t kink_signature() const override {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    std::uint8_t byte = 0;
    for (std::size_t i = 0; i < input_.size(); ++i) {
      byte = static_cast<std::uint8_t>((byte << 1) | (input_[i] > T(0) ? 1 : 0));
      if (i % 8 == 7) h = fnv_bytes(h, &byte, 1);
    }
    return fnv_bytes(h, &byte, 1);
  }
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<ReluLayer>(*this); }

 private:
  Tensor<T> input_;
};

template <typename T>
class DenseLayer final : public Layer<T> {
 public:
  DenseLayer(const LayerConfig& c, Rng* init)
      : Layer<T>(c),
        weights_(he_uniform<T>({c.in_channels, c.filters}, c.in_channels, init)),
        bias_(Tensor<T>({c.filters})) {}
  Tensor<T> forward(const Tensor<T>& input, Mode) override {
    input_ = input;
    return dense_forward(input, weights_.value, bias_.value);
  }
  Tensor<T> backward(const Tensor<T>& grad_out) override {
    DenseGrads<T> g = dense_backward(grad_out, input_, weights_.value);
    for (std::size_t i = 0; i < g.weights.size(); ++i) weights_.grad[i] += g.weights[i];
    for (std::size_t i = 0; i < g.bias.size(); ++i) bias_.grad[i] += g.bias[i];
    return std::move(g.input);
  }
  std::vector<Parameter<T>*> parameters() override { return {&weights_, &bias_}; }
  std::vector<NamedTensor<T>> state() override {
    return {{"weights", &weights_.value}, {"bias", &bias_.value}};
  }
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<DenseLayer>(*this); }

 private:
  Parameter<T> weights_;
  Parameter<T> bias_;
  Tensor<T> input_;
};

template <typename T>
class DropoutLayer final : public Layer<T> {
 public:
  explicit DropoutLayer(const LayerConfig& c) : Layer<T>(c) {}
  Tensor<T> forward(const Tensor<T>& input, Mode mode) override {
    return dropout_forward(input, this->config_.dropout_rate, mode, rng_, &mask_);
  }
  Tensor<T> backward(const Tensor<T>& grad_out) override {
    return dropout_backward(grad_out, mask_);
  }
  void set_rng(Rng* rng) override { rng_ = rng; }
  std::unique_ptr<Layer<T>> clone() const override {
    auto copy = std::make_unique<DropoutLayer>(*this);
    copy->rng_ = nullptr;
    return copy;
  }

 private:
  Rng* rng_ = nullptr;
  std::vector<T> mask_;
};

template <typename T>
class SigmoidLayer final : public Layer<T> {
 public:
  explicit SigmoidLayer(const LayerConfig& c) : Layer<T>(c) {}
  Tensor<T> forward(const Tensor<T>& input, Mode) override {
    output_ = sigmoid_forward(input);
    return output_;
  }
  Tensor<T> backward(const Tensor<T>& grad_out) override {
    return sigmoid_backward(grad_out, output_);
  }
  std::unique_ptr<Layer<T>> clone() const override {
    return std::make_unique<SigmoidLayer>(*this);
  }

 private:
  Tensor<T> output_;
};

template <typename T>
class SoftmaxLayer final : public Layer<T> {
 public:
  explicit SoftmaxLayer(const LayerConfig& c) : Layer<T>(c) {}
  Tensor<T> forward(const Tensor<T>& input, Mode) override {
    output_ = softmax_forward(input);
    return output_;
  }
  Tensor<T> backward(const Tensor<T>& grad_out) override {
    return softmax_backward(grad_out, output_);
  }
  std::unique_ptr<Layer<T>> clone() const override {
    return std::make_unique<SoftmaxLayer>(*this);
  }

 private:
  Tensor<T> output_;
};

// (N, ...) -> (N, prod(...)); a lone (T, C) sequence becomes (1, T*C).
template <typename T>
class FlattenLayer final : public Layer<T> {
 public:
  explicit FlattenLayer(const LayerConfig& c) : Layer<T>(c) {}
  Tensor<T> forward(const Tensor<T>& input, Mode) override {
    input_shape_ = input.shape();
    Tensor<T> out = input;
    const std::size_t batch = input.rank() >= 3 ? input.dim(0) : 1;
    out.reshape({batch, input.size() / batch});
    return out;
  }
  Tensor<T> backward(const Tensor<T>& grad_out) override {
    Tensor<T> g = grad_out;
    g.reshape(input_shape_);
    return g;
  }
  std::unique_ptr<Layer<T>> clone() const override {
    return std::make_unique<FlattenLayer>(*this);
  }

 private:
  Shape input_shape_;
};

}  // namespace

template <typename T>
std::unique_ptr<Layer<T>> make_layer(const json& description, Rng* init) {
  const LayerConfig c = LayerConfig::from_json(description);
  switch (c.kind) {
    case LayerKind::conv1d: return std::make_unique<Conv1dLayer<T>>(c, init);
    case LayerKind::maxpool1d: return std::make_unique<MaxPoolLayer<T>>(c);
    case LayerKind::batchnorm:
      return std::make_unique<BatchNormLayer<T>>(c, description.value("updates", std::size_t{0}));
    case LayerKind::relu: return std::make_unique<ReluLayer<T>>(c);
    case LayerKind::dense: return std::make_unique<DenseLayer<T>>(c, init);
    case LayerKind::dropout: return std::make_unique<DropoutLayer<T>>(c);
    case LayerKind::sigmoid: return std::make_unique<SigmoidLayer<T>>(c);
    case LayerKind::softmax: return std::make_unique<SoftmaxLayer<T>>(c);
    case LayerKind::flatten: return std::make_unique<FlattenLayer<T>>(c);
  }
  throw DataError("unsupported layer kind");
}

template std::unique_ptr<Layer<float>> make_layer<float>(const json&, Rng*);
template std::unique_ptr<Layer<double>> make_layer<double>(const json&, Rng*);

}  // namespace mlms::nn
