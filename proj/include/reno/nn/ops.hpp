// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>

#include "reno/nn/rng.hpp"
#include "reno/nn/tape.hpp"

namespace reno::nn {

/// out = x·W + b over the last axis of x. x: [..., d_in], W: [d_in, d_out],
/// b: [d_out].
template <typename Scalar>
Var linear(Tape<Scalar>& tape, Var x, Var weights, std::optional<Var> bias);

template <typename Scalar>
Var relu(Tape<Scalar>& tape, Var x);

/// Inverted dropout; identity when training is false or rate is zero.
template <typename Scalar>
Var dropout(Tape<Scalar>& tape, Var x, double rate, Rng& rng, bool training);

/// Valid (unpadded) stride-1 convolution. x: [batch, c_in, length],
/// filters: [c_out, c_in, kernel], bias: [c_out].
template <typename Scalar>
Var conv1d(Tape<Scalar>& tape, Var x, Var filters, Var bias);

/// Max-pool along the last axis of [batch, channels, length]. Output length
/// is floor((length - window) / stride) + 1. Gradient goes to the argmax
/// (first occurrence on ties).
template <typename Scalar>
Var max_pool1d(Tape<Scalar>& tape, Var x, std::size_t window, std::size_t stride);

/// Max-pool to exactly out_length positions; window i covers
/// [floor(i·L/n), ceil((i+1)·L/n)).
template <typename Scalar>
Var adaptive_max_pool1d(Tape<Scalar>& tape, Var x, std::size_t out_length);

template <typename Scalar>
Var reshape(Tape<Scalar>& tape, Var x, Shape shape);

/// [batch, a, b] -> [batch, b, a].
template <typename Scalar>
Var swap_last_axes(Tape<Scalar>& tape, Var x);

/// Softmax over the last axis, stabilized by subtracting the row max.
template <typename Scalar>
Var softmax(Tape<Scalar>& tape, Var x);

/// Batched product of [g, m, k] and [g, k, n] (or [g, n, k] when
/// transpose_rhs is set).
template <typename Scalar>
Var batched_matmul(Tape<Scalar>& tape, Var lhs, Var rhs, bool transpose_rhs);

template <typename Scalar>
Var scale(Tape<Scalar>& tape, Var x, double factor);

/// [batch, tokens, heads·d_k] -> [batch·heads, tokens, d_k].
template <typename Scalar>
Var split_heads(Tape<Scalar>& tape, Var x, std::size_t heads);

/// Inverse of split_heads.
template <typename Scalar>
Var merge_heads(Tape<Scalar>& tape, Var x, std::size_t heads);

/// Concatenates two [batch, d] tensors into [batch, d_a + d_b].
template <typename Scalar>
Var concat_features(Tape<Scalar>& tape, Var a, Var b);

/// wa·a + wb·b for equally shaped a and b.
template <typename Scalar>
Var weighted_sum(Tape<Scalar>& tape, Var a, double wa, Var b, double wb);

}  // namespace reno::nn
