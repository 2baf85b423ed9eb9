#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cdcnn {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape) noexcept;
std::string shape_to_string(const Shape& shape);

// Dense row-major tensor (last axis fastest) with value semantics.
//
// Only the handful of accessors the network needs are provided; layers work
// directly on the flat buffer through data().
template <typename T>
class BasicTensor {
public:
  using value_type = T;

  BasicTensor() = default;
  explicit BasicTensor(Shape shape, T fill = T{0});
  BasicTensor(Shape shape, std::vector<T> data);

  static BasicTensor zeros_like(const BasicTensor& other) { return BasicTensor(other.shape_); }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }
  std::vector<T>& vec() noexcept { return data_; }
  const std::vector<T>& vec() const noexcept { return data_; }

  T& operator[](std::size_t i) noexcept { return data_[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_[i]; }

  T& at(std::size_t i, std::size_t j);
  const T& at(std::size_t i, std::size_t j) const;
  T& at(std::size_t i, std::size_t j, std::size_t k);
  const T& at(std::size_t i, std::size_t j, std::size_t k) const;

  void fill(T value) noexcept;
  void reshape(Shape shape);

  // True when every element is finite.
  bool all_finite() const noexcept;

  template <typename U>
  BasicTensor<U> cast() const {
    return BasicTensor<U>(shape_, std::vector<U>(data_.begin(), data_.end()));
  }

  friend bool operator==(const BasicTensor& a, const BasicTensor& b) = default;

private:
  Shape shape_;
  std::vector<T> data_;
};

using Tensor = BasicTensor<float>;
using TensorD = BasicTensor<double>;

// Throws ShapeError unless `t` has exactly `expected` shape.
template <typename T>
void require_shape(const BasicTensor<T>& t, const Shape& expected, std::string_view what);

// Throws NumericError naming `what` if any element is NaN/Inf.
template <typename T>
void require_finite(const BasicTensor<T>& t, std::string_view what);

// Bitwise equality of two float tensors (distinguishes -0/+0, NaN payloads).
bool bit_identical(const Tensor& a, const Tensor& b) noexcept;

extern template class BasicTensor<float>;
extern template class BasicTensor<double>;

}  // namespace cdcnn
