// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "reno/nn/grad_check.hpp"

namespace reno {

struct GradCheckCase {
  std::string name;
  double tolerance = 0.0;
  nn::GradCheckReport report;
};

/// Relative-error bounds for single layers/losses and for whole networks.
inline constexpr double kLayerTolerance = 1e-4;
inline constexpr double kEndToEndTolerance = 1e-3;


/// Checks every layer type, both losses, the joint objective and the full
/// RENO network against central differences in double precision, on random
/// data drawn from seed.
std::vector<GradCheckCase> run_gradcheck_suite(std::uint64_t seed);

}  // namespace reno
