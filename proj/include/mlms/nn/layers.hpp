// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mlms/nn/ops.hpp"

namespace mlms::nn {

enum class LayerKind { conv1d, maxpool1d, batchnorm, relu, dense, dropout, sigmoid, softmax, flatten };

std::string to_string(LayerKind kind);
LayerKind layer_kind_from_string(const std::string& name);

/// Architecture description of one layer; only the fields of its kind are used.
struct LayerConfig {
  LayerKind kind = LayerKind::relu;
  std::size_t in_channels = 0;    // conv1d, dense (input features), batchnorm
  std::size_t filter_length = 0;  // conv1d
  std::size_t filters = 0;        // conv1d output channels, dense units
  std::size_t pool_length = 0;    // maxpool1d
  double dropout_rate = 0.0;      // dropout
  double bn_momentum = 0.99;      // batchnorm
  double bn_epsilon = 1e-5;       // batchnorm

  static LayerConfig conv1d(std::size_t in_channels, std::size_t filter_length,
                            std::size_t filters);
  static LayerConfig maxpool1d(std::size_t pool_length);
  static LayerConfig batchnorm(std::size_t channels, double momentum = 0.99,
                               double epsilon = 1e-5);
  static LayerConfig dense(std::size_t in_features, std::size_t units);
  static LayerConfig dropout(double rate);
  static LayerConfig simple(LayerKind kind);

  /// Throws UserError when a length/rate invariant is violated.
  void validate() const;

  nlohmann::ordered_json to_json() const;
  static LayerConfig from_json(const nlohmann::ordered_json& j);

  bool operator==(const LayerConfig&) const = default;
};

template <typename T>
struct NamedTensor {
  std::string name;
  Tensor<T>* tensor;
};

template <typename T>
class Layer {
 public:
  explicit Layer(LayerConfig config) : config_(std::move(config)) {}
  virtual ~Layer() = default;

  const LayerConfig& config() const { return config_; }

  virtual Tensor<T> forward(const Tensor<T>& input, Mode mode) = 0;
  virtual Tensor<T> backward(const Tensor<T>& grad_out) = 0;

  virtual std::vector<Parameter<T>*> parameters() { return {}; }
  /// Persistent tensors in checkpoint order (parameters and buffers).
  virtual std::vector<NamedTensor<T>> state() { return {}; }
  /// Hash of the piecewise-linear branch taken by the last forward pass
  /// (ReLU masks, max-pool winners); 0 for smooth layers.
  virtual std::uint64_t kink_signature() const { return 0; }
  virtual void set_rng(Rng*) {}
  virtual std::unique_ptr<Layer> clone() const = 0;

  /// Config plus any non-tensor state, for checkpoint headers.
  virtual nlohmann::ordered_json describe() const { return config_.to_json(); }

 protected:
  LayerConfig config_;
};

/// Builds a layer from its description. Conv/dense weights are He-uniform
/// initialised from `init` (bound sqrt(6 / fan_in)), biases zero; BN gamma 1,
/// beta 0. `init` may be null when the weights will be loaded afterwards.
template <typename T>
std::unique_ptr<Layer<T>> make_layer(const nlohmann::ordered_json& description, Rng* init);

template <typename T>
std::unique_ptr<Layer<T>> make_layer(const LayerConfig& config, Rng* init) {
  return make_layer<T>(nlohmann::ordered_json(config.to_json()), init);
}

}  // namespace mlms::nn
