// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>

#include "reno/nn/tape.hpp"

namespace reno::losses {

/// Hyperparameters of the joint objective lambda·CE + (1 - lambda)·RD.
struct LossConfig {
  double beta = 2.0;    // divergence order, > 1
  double delta = 0.2;   // additive smoothing, > 0
  double lambda = 0.4;  // weight of the classification term, in [0, 1]

  /// Throws ConfigError when a field is out of range.
  void validate() const;
};

/// Mean over the batch of -log(p[label] + 1e-12). probs: [batch, C] rows on
/// the simplex (tolerance 1e-5). Throws LabelError for ids outside [0, C).
template <typename Scalar>
nn::Var cross_entropy(nn::Tape<Scalar>& tape, nn::Var probs, std::span<const int> labels);

/// Order-beta Rényi alignment term between two batches of distributions
/// z_x, z_y: [batch, M]. Per row:
///   1/(beta-1) · log Σ_j (z_x,j + delta)^beta · (z_y,j + delta)^(1-beta)
/// with no renormalization after smoothing; reduced by the batch mean.
template <typename Scalar>
nn::Var renyi_divergence(nn::Tape<Scalar>& tape, nn::Var z_x, nn::Var z_y, const LossConfig& config);

/// Applies a row softmax to raw features of both branches and then
/// renyi_divergence. The minimum over inputs is ln(1 + M·delta)/(beta - 1),
/// reached when both rows are equal.
template <typename Scalar>
nn::Var renyi_divergence_loss(nn::Tape<Scalar>& tape, nn::Var feat_x, nn::Var feat_y, const LossConfig& config);

/// lambda·ce + (1 - lambda)·rd.
template <typename Scalar>
nn::Var joint_loss(nn::Tape<Scalar>& tape, nn::Var ce, nn::Var rd, double lambda);

/// Scalar form of joint_loss.
double joint_loss(double ce, double rd, double lambda);

/// ln(1 + M·delta) / (beta - 1): the divergence of any input with itself.
double self_divergence(std::size_t features, const LossConfig& config);

}  // namespace reno::losses
