// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "reno/nn/parameter.hpp"

namespace reno::nn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected Adam. step() reads each parameter's grad and updates value
/// and moments in place. If any gradient is non-finite the whole step is
/// rejected with a NumericError naming the parameter, and nothing changes.
template <typename Scalar>
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  void step(ParameterStore<Scalar>& params) const;

  const AdamConfig& config() const { return config_; }

 private:
  AdamConfig config_;
};

extern template class Adam<float>;
extern template class Adam<double>;

}  // namespace reno::nn
