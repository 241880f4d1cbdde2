// SPDX-License-Identifier: Apache-2.0
#include "reno/nn/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "reno/errors.hpp"
#include "reno/nn/rng.hpp"

namespace reno::nn {

namespace {

std::vector<std::size_t> sample_coordinates(std::size_t size, std::size_t samples, Rng& rng) {
  std::vector<std::size_t> all(size);
  std::iota(all.begin(), all.end(), std::size_t{0});
  if (samples >= size) return all;
  rng.shuffle(std::span<std::size_t>(all));
  all.resize(samples);
  std::ranges::sort(all);
  return all;
}

}  // namespace

GradCheckReport grad_check(ParameterStore<double>& params, const LossFn& loss, const GradCheckOptions& options) {
  PiecewisePattern pattern;
  pattern.start_recording();
  const double base = loss(true, &pattern);
  pattern.start_replay();
  const double again = loss(false, &pattern);
  if (base != again || !std::isfinite(base)) {
    throw NumericError("grad_check: loss is not deterministic (" + std::to_string(base) + " vs " +
                       std::to_string(again) + ")");
  }
  std::vector<Tensor<double>> analytic;
  for (const auto& p : params) analytic.push_back(p.grad);

  Rng rng(options.seed);
  GradCheckReport report;
  const double h = options.step;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    auto& p = params[pi];
    ParameterCheck check{p.name};
    for (std::size_t idx : sample_coordinates(p.value.size(), options.samples, rng)) {
      const double original = p.value[idx];
      auto evaluate = [&](double value) {
        p.value[idx] = value;
        pattern.start_replay();
        return loss(false, &pattern);
      };
      const double plus = evaluate(original + h);
      const double minus = evaluate(original - h);
      p.value[idx] = original;
      const double numeric = (plus - minus) / (2.0 * h);
      const double exact = analytic[pi][idx];
      const double rel = std::abs(exact - numeric) / std::max({std::abs(exact), std::abs(numeric), 1e-8});
      check.max_relative_error = std::max(check.max_relative_error, rel);
      ++check.checked;
    }
    check.passed = check.max_relative_error < options.tolerance;
    report.max_relative_error = std::max(report.max_relative_error, check.max_relative_error);
    report.passed = report.passed && check.passed;
    report.parameters.push_back(std::move(check));
  }
  return report;
}

}  // namespace reno::nn
