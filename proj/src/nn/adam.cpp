// SPDX-License-Identifier: Apache-2.0
#include "reno/nn/adam.hpp"

#include <cmath>

#include "reno/errors.hpp"

namespace reno::nn {

template <typename Scalar>
void Adam<Scalar>::step(ParameterStore<Scalar>& params) const {
  if (params.size() == 0) return;
  const std::uint64_t steps = params[0].step_count;
  for (const auto& p : params) {
    if (p.step_count != steps) {
      throw NumericError("adam: parameter " + p.name + " is at step " + std::to_string(p.step_count) +
                         ", expected " + std::to_string(steps));
    }
    for (std::size_t i = 0; i < p.grad.size(); ++i) {
      if (!std::isfinite(p.grad[i])) {
        throw NumericError("adam: non-finite gradient in " + p.name + " at index " + std::to_string(i));
      }
    }
  }

  const double t = static_cast<double>(steps + 1);
  const auto b1 = static_cast<Scalar>(config_.beta1);
  const auto b2 = static_cast<Scalar>(config_.beta2);
  const auto correction1 = static_cast<Scalar>(1.0 - std::pow(config_.beta1, t));
  const auto correction2 = static_cast<Scalar>(1.0 - std::pow(config_.beta2, t));
  const auto lr = static_cast<Scalar>(config_.lr);
  const auto eps = static_cast<Scalar>(config_.eps);
  for (auto& p : params) {
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const Scalar g = p.grad[i];
      p.first_moment[i] = b1 * p.first_moment[i] + (Scalar{1} - b1) * g;
      p.second_moment[i] = b2 * p.second_moment[i] + (Scalar{1} - b2) * g * g;
      const Scalar m_hat = p.first_moment[i] / correction1;
      const Scalar v_hat = p.second_moment[i] / correction2;
      p.value[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
    }
    ++p.step_count;
  }
}

template class Adam<float>;
template class Adam<double>;

}  // namespace reno::nn
