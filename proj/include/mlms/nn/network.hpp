// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <vector>

#include "mlms/nn/layers.hpp"

namespace mlms::nn {

/// Sequential stack of layers. Forward/backward keep per-layer caches, so a
/// single instance must not be used from two threads; clone() gives an
/// independent copy.
template <typename T>
class Network {
 public:
  Network() = default;
  Network(const Network& other);
  Network& operator=(const Network& other);
  Network(Network&&) noexcept = default;
  Network& operator=(Network&&) noexcept = default;

  /// Rebuilds a network from describe() output, optionally initialising weights.
  static Network from_description(const nlohmann::ordered_json& layers, Rng* init);

  void add(std::unique_ptr<Layer<T>> layer);
  void add(const LayerConfig& config, Rng* init) { add(make_layer<T>(config, init)); }

  std::size_t layer_count() const { return layers_.size(); }
  Layer<T>& layer(std::size_t i) { return *layers_.at(i); }
  const Layer<T>& layer(std::size_t i) const { return *layers_.at(i); }

  /// Layer indices whose outputs forward() reports through `taps`.
  void set_taps(std::vector<std::size_t> taps) { taps_ = std::move(taps); }
  const std::vector<std::size_t>& taps() const { return taps_; }

  Tensor<T> forward(const Tensor<T>& input, Mode mode, std::vector<Tensor<T>>* taps = nullptr);
  /// Runs the first `count` layers only.
  Tensor<T> forward_prefix(const Tensor<T>& input, Mode mode, std::size_t count,
                           std::vector<Tensor<T>>* taps = nullptr);
  Tensor<T> backward(const Tensor<T>& grad_out);

  std::vector<Parameter<T>*> parameters();
  std::size_t parameter_count();
  void zero_grad();

  /// Persistent tensors in layer order, names prefixed with the layer index.
  std::vector<NamedTensor<T>> state();

  /// Random stream used by dropout layers in train mode.
  void set_rng(Rng* rng);

  std::uint64_t kink_signature() const;
  nlohmann::ordered_json describe() const;

 private:
  std::vector<std::unique_ptr<Layer<T>>> layers_;
  std::vector<std::size_t> taps_;
};

}  // namespace mlms::nn
