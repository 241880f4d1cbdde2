// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "reno/nn/parameter.hpp"
#include "reno/nn/tape.hpp"

namespace reno::nn {

struct GradCheckOptions {
  double step = 1e-3;          // central-difference h
  double tolerance = 1e-2;     // max allowed relative error
  std::size_t samples = 12;    // coordinates checked per parameter (all if fewer)
  std::uint64_t seed = 0;      // coordinate sampling
};

struct ParameterCheck {
  std::string name;
  double max_relative_error = 0.0;
  std::size_t checked = 0;
  bool passed = true;
};

struct GradCheckReport {
  std::vector<ParameterCheck> parameters;
  double max_relative_error = 0.0;
  bool passed = true;
};

/// Loss evaluation for checking. The callee must attach pattern to its tape
/// (Tape::set_pattern). When with_gradients is true it must also zero the
/// parameter grads, run backward, and leave the analytic gradients in
/// Parameter::grad.
using LossFn = std::function<double(bool with_gradients, PiecewisePattern* pattern)>;

/// Compares analytic gradients against central differences on sampled
/// coordinates. Relative error is |g_a - g_fd| / max(|g_a|, |g_fd|, 1e-8).
/// The ReLU / max-pool pattern of the unperturbed pass is replayed during the
/// perturbed passes, so differences never straddle a switch. Throws
/// NumericError if two evaluations at the same point differ.
GradCheckReport grad_check(ParameterStore<double>& params, const LossFn& loss, const GradCheckOptions& options = {});

}  // namespace reno::nn
