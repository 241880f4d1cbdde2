// SPDX-License-Identifier: Apache-2.0
#include "reno/nn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "reno/errors.hpp"

namespace reno::nn {

std::size_t numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string to_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

template <typename Scalar>
Tensor<Scalar>::Tensor(Shape shape, Scalar fill) : shape_(std::move(shape)), data_(numel(shape_), fill) {
  if (std::ranges::find(shape_, std::size_t{0}) != shape_.end()) {
    throw DimensionError("tensor shape " + to_string(shape_) + " has a zero extent");
  }
}

template <typename Scalar>
Tensor<Scalar>::Tensor(Shape shape, std::vector<Scalar> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (numel(shape_) != data_.size()) {
    throw DimensionError("tensor shape " + to_string(shape_) + " holds " + std::to_string(numel(shape_)) +
                         " values, got " + std::to_string(data_.size()));
  }
}

template <typename Scalar>
Tensor<Scalar> Tensor<Scalar>::reshaped(Shape shape) const {
  return Tensor(std::move(shape), data_);
}

template <typename Scalar>
void Tensor<Scalar>::fill(Scalar value) {
  std::ranges::fill(data_, value);
}

template <typename Scalar>
bool Tensor<Scalar>::all_finite() const {
  return std::ranges::all_of(data_, [](Scalar v) { return std::isfinite(v); });
}

template class Tensor<float>;
template class Tensor<double>;

}  // namespace reno::nn
