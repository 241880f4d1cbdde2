// SPDX-License-Identifier: Apache-2.0
#include "reno/losses.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "reno/errors.hpp"
#include "reno/nn/ops.hpp"

namespace reno::losses {

using nn::Tape;
using nn::Tensor;
using nn::Var;

void LossConfig::validate() const {
  if (!(beta > 1.0)) throw ConfigError("beta must exceed 1, got " + std::to_string(beta));
  if (!(delta > 0.0)) throw ConfigError("delta must be positive, got " + std::to_string(delta));
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("lambda must lie in [0, 1], got " + std::to_string(lambda));
}

template <typename Scalar>
Var cross_entropy(Tape<Scalar>& tape, Var probs, std::span<const int> labels) {
  const auto& p = tape.value(probs);
  if (p.rank() != 2 || p.dim(0) != labels.size()) {
    throw DimensionError("cross_entropy: predictions " + nn::to_string(p.shape()) + " vs " +
                         std::to_string(labels.size()) + " labels");
  }
  const std::size_t batch = p.dim(0), classes = p.dim(1);
  constexpr double kFloor = 1e-12;
  double total = 0.0;
  for (std::size_t r = 0; r < batch; ++r) {
    const int label = labels[r];
    if (label < 0 || static_cast<std::size_t>(label) >= classes) {
      throw LabelError("cross_entropy: label " + std::to_string(label) + " at row " + std::to_string(r) +
                       " is outside [0, " + std::to_string(classes) + ")");
    }
    double row_sum = 0.0;
    for (std::size_t c = 0; c < classes; ++c) row_sum += p[r * classes + c];
    if (std::abs(row_sum - 1.0) > 1e-5) {
      throw DimensionError("cross_entropy: row " + std::to_string(r) + " sums to " + std::to_string(row_sum));
    }
    total -= std::log(static_cast<double>(p[r * classes + label]) + kFloor);
  }
  auto loss = Tensor<Scalar>::scalar(static_cast<Scalar>(total / static_cast<double>(batch)));
  std::vector<int> ids(labels.begin(), labels.end());
  return tape.record(std::move(loss), {probs}, [probs, ids = std::move(ids), batch, classes](Tape<Scalar>& t, Var self) {
    const Scalar g = t.grad(self)[0];
    const auto& p = t.value(probs);
    auto& gp = t.grad(probs);
    for (std::size_t r = 0; r < batch; ++r) {
      const std::size_t at = r * classes + static_cast<std::size_t>(ids[r]);
      gp[at] -= g / ((p[at] + static_cast<Scalar>(kFloor)) * static_cast<Scalar>(batch));
    }
  });
}

template <typename Scalar>
Var renyi_divergence(Tape<Scalar>& tape, Var z_x, Var z_y, const LossConfig& config) {
  config.validate();
  const auto& x = tape.value(z_x);
  const auto& y = tape.value(z_y);
  if (x.rank() != 2 || x.shape() != y.shape()) {
    throw DimensionError("renyi_divergence: branch features " + nn::to_string(x.shape()) + " and " +
                         nn::to_string(y.shape()) + " differ");
  }
  const std::size_t batch = x.dim(0), features = x.dim(1);
  const auto beta = static_cast<Scalar>(config.beta);
  const auto delta = static_cast<Scalar>(config.delta);
  const Scalar inv = Scalar{1} / (beta - Scalar{1});

  // Per-row sums are kept for backward.
  std::vector<Scalar> sums(batch);
  Scalar total{0};
  for (std::size_t r = 0; r < batch; ++r) {
    Scalar s{0};
    for (std::size_t j = 0; j < features; ++j) {
      const Scalar a = x[r * features + j] + delta;
      const Scalar b = y[r * features + j] + delta;
      s += std::pow(a, beta) * std::pow(b, Scalar{1} - beta);
    }
    sums[r] = s;
    total += inv * std::log(s);
  }
  auto loss = Tensor<Scalar>::scalar(total / static_cast<Scalar>(batch));
  return tape.record(std::move(loss), {z_x, z_y},
                     [z_x, z_y, sums = std::move(sums), batch, features, beta, delta, inv](Tape<Scalar>& t, Var self) {
                       const Scalar g = t.grad(self)[0] / static_cast<Scalar>(batch);
                       const auto& x = t.value(z_x);
                       const auto& y = t.value(z_y);
                       Tensor<Scalar>* gx = t.requires_grad(z_x) ? &t.grad(z_x) : nullptr;
                       Tensor<Scalar>* gy = t.requires_grad(z_y) ? &t.grad(z_y) : nullptr;
                       for (std::size_t r = 0; r < batch; ++r) {
                         const Scalar row = g / sums[r];
                         for (std::size_t j = 0; j < features; ++j) {
                           const std::size_t at = r * features + j;
                           const Scalar a = x[at] + delta;
                           const Scalar b = y[at] + delta;
                           // term = a^beta b^(1-beta); d/da = beta term / a, d/db = (1-beta) term / b
                           const Scalar term = std::pow(a, beta) * std::pow(b, Scalar{1} - beta);
                           if (gx) (*gx)[at] += row * inv * beta * term / a;
                           if (gy) (*gy)[at] -= row * term / b;
                         }
                       }
                     });
}

template <typename Scalar>
Var renyi_divergence_loss(Tape<Scalar>& tape, Var feat_x, Var feat_y, const LossConfig& config) {
  const auto& x = tape.value(feat_x);
  const auto& y = tape.value(feat_y);
  if (x.rank() != 2 || x.shape() != y.shape()) {
    throw DimensionError("renyi_divergence_loss: branch features " + nn::to_string(x.shape()) + " and " +
                         nn::to_string(y.shape()) + " differ");
  }
  config.validate();
  return renyi_divergence(tape, nn::softmax(tape, feat_x), nn::softmax(tape, feat_y), config);
}

template <typename Scalar>
Var joint_loss(Tape<Scalar>& tape, Var ce, Var rd, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("lambda must lie in [0, 1], got " + std::to_string(lambda));
  return nn::weighted_sum(tape, ce, lambda, rd, 1.0 - lambda);
}

double joint_loss(double ce, double rd, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("lambda must lie in [0, 1], got " + std::to_string(lambda));
  if (!std::isfinite(ce) || !std::isfinite(rd)) throw NumericError("joint_loss: non-finite input");
  return lambda * ce + (1.0 - lambda) * rd;
}

double self_divergence(std::size_t features, const LossConfig& config) {
  return std::log1p(static_cast<double>(features) * config.delta) / (config.beta - 1.0);
}

#define RENO_INSTANTIATE_LOSSES(T)                                                        \
  template Var cross_entropy<T>(Tape<T>&, Var, std::span<const int>);                     \
  template Var renyi_divergence<T>(Tape<T>&, Var, Var, const LossConfig&);                \
  template Var renyi_divergence_loss<T>(Tape<T>&, Var, Var, const LossConfig&);           \
  template Var joint_loss<T>(Tape<T>&, Var, Var, double);

RENO_INSTANTIATE_LOSSES(float)
RENO_INSTANTIATE_LOSSES(double)

}  // namespace reno::losses
