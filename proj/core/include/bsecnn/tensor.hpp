#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bsecnn/error.hpp"

namespace bsecnn {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_to_string(const Shape& shape);

/// Dense row-major n-dimensional array.
///
/// The shape is fixed at construction; element values stay writable so that
/// optimizers can update parameters in place. Layer activations use the
/// channels-last layout [H, W, C], batches prepend a leading B axis.
template <typename T>
class BasicTensor {
 public:
  using value_type = T;

  BasicTensor() = default;

  /// Zero-filled tensor.
  explicit BasicTensor(Shape shape) : shape_(std::move(shape)), data_(shape_numel(shape_), T{0}) {
    check_dims();
  }

  BasicTensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
    check_dims();
    if (data_.size() != shape_numel(shape_)) {
      throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                           " does not match shape " + shape_to_string(shape_));
    }
  }

  BasicTensor(std::initializer_list<std::size_t> shape, std::initializer_list<T> data)
      : BasicTensor(Shape(shape), std::vector<T>(data)) {}

  static BasicTensor filled(Shape shape, T value) {
    BasicTensor t(std::move(shape));
    for (auto& x : t.data_) x = value;
    return t;
  }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }
  const std::vector<T>& values() const noexcept { return data_; }

  T& operator[](std::size_t i) noexcept { return data_[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_[i]; }

  /// Element access for rank-2 tensors.
  T& at(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
  const T& at(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }

  /// Element access for rank-3 tensors.
  T& at(std::size_t i, std::size_t j, std::size_t k) {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }
  const T& at(std::size_t i, std::size_t j, std::size_t k) const {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }

  /// Same data under a new shape with identical element count.
  BasicTensor reshaped(Shape shape) const {
    return BasicTensor(std::move(shape), data_);
  }

  /// Copy of slice `index` along the leading axis.
  BasicTensor slice(std::size_t index) const {
    if (rank() == 0 || index >= shape_[0]) {
      throw DimensionError("slice index " + std::to_string(index) + " out of range for shape " +
                           shape_to_string(shape_));
    }
    Shape inner(shape_.begin() + 1, shape_.end());
    const std::size_t n = shape_numel(inner);
    const auto first = data_.begin() + static_cast<std::ptrdiff_t>(index * n);
    return BasicTensor(std::move(inner), std::vector<T>(first, first + static_cast<std::ptrdiff_t>(n)));
  }

  /// View of slice `index` along the leading axis.
  std::span<const T> row(std::size_t index) const {
    const std::size_t n = shape_.empty() ? 0 : data_.size() / shape_[0];
    return std::span<const T>(data_).subspan(index * n, n);
  }
  std::span<T> row(std::size_t index) {
    const std::size_t n = shape_.empty() ? 0 : data_.size() / shape_[0];
    return std::span<T>(data_).subspan(index * n, n);
  }

  void fill(T value) {
    for (auto& x : data_) x = value;
  }

  template <typename U>
  BasicTensor<U> cast() const {
    std::vector<U> out(data_.size());
    for (std::size_t i = 0; i < data_.size(); ++i) out[i] = static_cast<U>(data_[i]);
    return BasicTensor<U>(shape_, std::move(out));
  }

  friend bool operator==(const BasicTensor&, const BasicTensor&) = default;

 private:
  void check_dims() const {
    for (std::size_t axis = 0; axis < shape_.size(); ++axis) {
      if (shape_[axis] == 0) {
        throw DimensionError("tensor axis " + std::to_string(axis) + " has zero extent in shape " +
                             shape_to_string(shape_));
      }
    }
  }

  Shape shape_;
  std::vector<T> data_;
};

using Tensor = BasicTensor<float>;
using Tensor64 = BasicTensor<double>;

/// Stack equally-shaped tensors along a new leading axis.
template <typename T>
BasicTensor<T> stack(std::span<const BasicTensor<T>> items) {
  if (items.empty()) throw InputError("cannot stack an empty tensor list");
  Shape shape = items.front().shape();
  std::vector<T> data;
  data.reserve(items.size() * items.front().size());
  for (const auto& t : items) {
    if (t.shape() != shape) {
      throw DimensionError("cannot stack " + shape_to_string(t.shape()) + " with " +
                           shape_to_string(shape));
    }
    data.insert(data.end(), t.values().begin(), t.values().end());
  }
  shape.insert(shape.begin(), items.size());
  return BasicTensor<T>(std::move(shape), std::move(data));
}

}  // namespace bsecnn
