#include "cdcnn/tensor.hpp"

#include <cmath>
#include <cstring>
#include <functional>
#include <numeric>

#include "cdcnn/error.hpp"

namespace cdcnn {

std::size_t shape_size(const Shape& shape) noexcept {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_to_string(const Shape& shape) {
  std::string out = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(shape[i]);
  }
  return out + ")";
}

namespace {

void check_extents(const Shape& shape) {
  for (auto e : shape) {
    if (e == 0) throw ShapeError("tensor extents must be positive, got " + shape_to_string(shape));
  }
}

}  // namespace

template <typename T>
BasicTensor<T>::BasicTensor(Shape shape, T fill) : shape_(std::move(shape)) {
  check_extents(shape_);
  data_.assign(shape_size(shape_), fill);
}

template <typename T>
BasicTensor<T>::BasicTensor(Shape shape, std::vector<T> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  check_extents(shape_);
  if (shape_size(shape_) != data_.size()) {
    throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                     " does not match shape " + shape_to_string(shape_));
  }
}

template <typename T>
std::size_t BasicTensor<T>::dim(std::size_t axis) const {
  if (axis >= shape_.size()) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " +
                     shape_to_string(shape_));
  }
  return shape_[axis];
}

template <typename T>
T& BasicTensor<T>::at(std::size_t i, std::size_t j) {
  return data_[i * shape_[1] + j];
}
template <typename T>
const T& BasicTensor<T>::at(std::size_t i, std::size_t j) const {
  return data_[i * shape_[1] + j];
}
template <typename T>
T& BasicTensor<T>::at(std::size_t i, std::size_t j, std::size_t k) {
  return data_[(i * shape_[1] + j) * shape_[2] + k];
}
template <typename T>
const T& BasicTensor<T>::at(std::size_t i, std::size_t j, std::size_t k) const {
  return data_[(i * shape_[1] + j) * shape_[2] + k];
}

template <typename T>
void BasicTensor<T>::fill(T value) noexcept {
  std::fill(data_.begin(), data_.end(), value);
}

template <typename T>
void BasicTensor<T>::reshape(Shape shape) {
  check_extents(shape);
  if (shape_size(shape) != data_.size()) {
    throw ShapeError("cannot reshape " + shape_to_string(shape_) + " to " + shape_to_string(shape));
  }
  shape_ = std::move(shape);
}

template <typename T>
bool BasicTensor<T>::all_finite() const noexcept {
  for (T v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

template <typename T>
void require_shape(const BasicTensor<T>& t, const Shape& expected, std::string_view what) {
  if (t.shape() != expected) {
    throw ShapeError(std::string(what) + ": expected shape " + shape_to_string(expected) +
                     ", got " + shape_to_string(t.shape()));
  }
}

template <typename T>
void require_finite(const BasicTensor<T>& t, std::string_view what) {
  if (!t.all_finite()) throw NumericError(std::string(what) + " contains non-finite values");
}

bool bit_identical(const Tensor& a, const Tensor& b) noexcept {
  return a.shape() == b.shape() &&
         std::memcmp(a.data().data(), b.data().data(), a.size() * sizeof(float)) == 0;
}

template class BasicTensor<float>;
template class BasicTensor<double>;
template void require_shape(const BasicTensor<float>&, const Shape&, std::string_view);
template void require_shape(const BasicTensor<double>&, const Shape&, std::string_view);
template void require_finite(const BasicTensor<float>&, std::string_view);
template void require_finite(const BasicTensor<double>&, std::string_view);

}  // namespace cdcnn
