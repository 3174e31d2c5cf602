// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mlms::nn {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape);

/// Dense row-major tensor. Invariant: product(shape) == data.size().
template <typename T>
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T(0)) : shape_(std::move(shape)) {
    check_extents();
    data_.assign(shape_size(shape_), fill);
  }
  Tensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
    check_extents();
    if (shape_size(shape_) != data_.size()) {
      throw std::invalid_argument("tensor data length does not match shape " +
                                  shape_string(shape_));
    }
  }

  const Shape& shape() const { return shape_; }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  /// Extent of the last axis (channels / features).
  std::size_t last_dim() const { return shape_.empty() ? 0 : shape_.back(); }
  /// Product of all but the last axis.
  std::size_t rows() const { return last_dim() == 0 ? 0 : size() / last_dim(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::span<T> values() & { return data_; }
  std::span<const T> values() const& { return data_; }
  std::vector<T>& storage() & { return data_; }
  const std::vector<T>& storage() const& { return data_; }
  // Moves out of temporaries so range-for over f().storage() stays valid.
  std::vector<T> storage() && { return std::move(data_); }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  /// Same data, new shape of equal size.
  void reshape(Shape shape) {
    if (shape_size(shape) != data_.size()) {
      throw std::invalid_argument("cannot reshape " + shape_string(shape_) + " to " +
                                  shape_string(shape));
    }
    shape_ = std::move(shape);
  }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  bool operator==(const Tensor& other) const = default;

 private:
  void check_extents() const {
    for (const std::size_t e : shape_) {
      if (e == 0) throw std::invalid_argument("tensor extents must be positive");
    }
  }

  Shape shape_;
  std::vector<T> data_;
};

/// Trainable tensor with its gradient and momentum buffers (always same shape).
template <typename T>
struct Parameter {
  Parameter() = default;
  explicit Parameter(Tensor<T> init)
      : value(std::move(init)), grad(value.shape()), velocity(value.shape()) {}

  Tensor<T> value;
  Tensor<T> grad;
  Tensor<T> velocity;

  void zero_grad() { grad.fill(T(0)); }
};

}  // namespace mlms::nn
