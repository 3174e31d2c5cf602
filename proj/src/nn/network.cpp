// SPDX-License-Identifier: Apache-2.0
#include "mlms/nn/network.hpp"

#include <algorithm>

#include "mlms/error.hpp"

namespace mlms::nn {

template <typename T>
Network<T>::Network(const Network& other) : taps_(other.taps_) {
  layers_.reserve(other.layers_.size());
  for (const auto& l : other.layers_) layers_.push_back(l->clone());
}

template <typename T>
Network<T>& Network<T>::operator=(const Network& other) {
  if (this != &other) {
    Network copy(other);
    *this = std::move(copy);
  }
  return *this;
}

template <typename T>
Network<T> Network<T>::from_description(const nlohmann::ordered_json& layers, Rng* init) {
  if (!layers.is_array()) throw DataError("network description must be an array of layers");
  Network net;
  for (const auto& d : layers) net.add(make_layer<T>(d, init));
  return net;
}

template <typename T>
void Network<T>::add(std::unique_ptr<Layer<T>> layer) {
  layers_.push_back(std::move(layer));
}

template <typename T>
Tensor<T> Network<T>::forward(const Tensor<T>& input, Mode mode, std::vector<Tensor<T>>* taps) {
  return forward_prefix(input, mode, layers_.size(), taps);
}

template <typename T>
Tensor<T> Network<T>::forward_prefix(const Tensor<T>& input, Mode mode, std::size_t count,
                                     std::vector<Tensor<T>>* taps) {
  if (taps) taps->clear();
  Tensor<T> x = input;
  for (std::size_t i = 0; i < std::min(count, layers_.size()); ++i) {
    x = layers_[i]->forward(x, mode);
    if (taps && std::find(taps_.begin(), taps_.end(), i) != taps_.end()) taps->push_back(x);
  }
  return x;
}

template <typename T>
Tensor<T> Network<T>::backward(const Tensor<T>& grad_out) {
  Tensor<T> g = grad_out;
  for (std::size_t i = layers_.size(); i-- > 0;) g = layers_[i]->backward(g);
  return g;
}

template <typename T>
std::vector<Parameter<T>*> Network<T>::parameters() {
  std::vector<Parameter<T>*> out;
  for (auto& l : layers_) {
    for (Parameter<T>* p : l->parameters()) out.push_back(p);
  }
  return out;
}

template <typename T>
std::size_t Network<T>::parameter_count() {
  std::size_t n = 0;
  for (const Parameter<T>* p : parameters()) n += p->value.size();
  return n;
}

template <typename T>
void Network<T>::zero_grad() {
  for (Parameter<T>* p : parameters()) p->zero_grad();
}

template <typename T>
std::vector<NamedTensor<T>> Network<T>::state() {
  std::vector<NamedTensor<T>> out;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    for (NamedTensor<T>& t : layers_[i]->state()) {
      out.push_back({std::to_string(i) + "." + t.name, t.tensor});
    }
  }
  return out;
}

template <typename T>
void Network<T>::set_rng(Rng* rng) {
  for (auto& l : layers_) l->set_rng(rng);
}

template <typename T>
std::uint64_t Network<T>::kink_signature() const {
  std::uint64_t h = 0;
  for (const auto& l : layers_) h = h * 0x9e3779b97f4a7c15ULL + l->kink_signature();
  return h;
}

template <typename T>
nlohmann::ordered_json Network<T>::describe() const {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& l : layers_) arr.push_back(l->describe());
  return arr;
}

template class Network<float>;
template class Network<double>;

}  // namespace mlms::nn
