// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <deque>
#include <string>
#include <vector>

#include "reno/nn/tensor.hpp"

namespace reno::nn {

/// Trainable tensor together with its gradient and Adam moments.
template <typename Scalar>
struct Parameter {
  std::string name;
  Tensor<Scalar> value;
  Tensor<Scalar> grad;
  Tensor<Scalar> first_moment;
  Tensor<Scalar> second_moment;
  std::uint64_t step_count = 0;

  Parameter(std::string param_name, Tensor<Scalar> initial)
      : name(std::move(param_name)),
        value(std::move(initial)),
        grad(value.shape()),
        first_moment(value.shape()),
        second_moment(value.shape()) {}

  void zero_grad() { grad.fill(Scalar{0}); }
};

/// Registry of a model's parameters in registration order. References to
/// registered parameters stay valid for the lifetime of the store.
template <typename Scalar>
class ParameterStore {
 public:
  ParameterStore() = default;
  ParameterStore(const ParameterStore&) = delete;
  ParameterStore& operator=(const ParameterStore&) = delete;
  ParameterStore(ParameterStore&&) noexcept = default;
  ParameterStore& operator=(ParameterStore&&) noexcept = default;

  Parameter<Scalar>& add(std::string name, Tensor<Scalar> initial) {
    return params_.emplace_back(std::move(name), std::move(initial));
  }

  std::size_t size() const { return params_.size(); }
  Parameter<Scalar>& operator[](std::size_t i) { return params_[i]; }
  const Parameter<Scalar>& operator[](std::size_t i) const { return params_[i]; }
  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  Parameter<Scalar>* find(const std::string& name) {
    for (auto& p : params_) {
      if (p.name == name) return &p;
    }
    return nullptr;
  }

  std::size_t scalar_count() const {
    std::size_t total = 0;
    for (const auto& p : params_) total += p.value.size();
    return total;
  }

  void zero_grad() {
    for (auto& p : params_) p.zero_grad();
  }

  std::vector<Tensor<Scalar>> snapshot() const {
    std::vector<Tensor<Scalar>> out;
    out.reserve(params_.size());
    for (const auto& p : params_) out.push_back(p.value);
    return out;
  }

  void restore(const std::vector<Tensor<Scalar>>& values) {
    for (std::size_t i = 0; i < params_.size(); ++i) params_[i].value = values.at(i);
  }

 private:
  std::deque<Parameter<Scalar>> params_;
};

}  // namespace reno::nn
