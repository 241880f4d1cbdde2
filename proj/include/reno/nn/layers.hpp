// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <string>

#include "reno/nn/ops.hpp"
#include "reno/nn/parameter.hpp"
#include "reno/nn/rng.hpp"
#include "reno/nn/tape.hpp"

namespace reno::nn {

/// Fully connected layer: x·W + b. Weights uniform in
/// ±sqrt(6 / (fan_in + fan_out)), bias zero.
template <typename Scalar>
class Dense {
 public:
  Dense(ParameterStore<Scalar>& store, const std::string& name, std::size_t in_features, std::size_t out_features,
        Rng& init_rng);

  Var forward(Tape<Scalar>& tape, Var x) const;

  std::size_t in_features() const { return weights_->value.dim(0); }
  std::size_t out_features() const { return weights_->value.dim(1); }

 private:
  Parameter<Scalar>* weights_;
  Parameter<Scalar>* bias_;
};

/// conv1d (kernel 3, stride 1, no padding) -> ReLU -> max-pool(2, 2).
template <typename Scalar>
class ConvBlock {
 public:
  static constexpr std::size_t kKernel = 3;
  static constexpr std::size_t kPoolWindow = 2;

  ConvBlock(ParameterStore<Scalar>& store, const std::string& name, std::size_t in_channels,
            std::size_t filters, Rng& init_rng);

  /// x: [batch, in_channels, length] -> [batch, filters, floor((length - 2) / 2)].
  Var forward(Tape<Scalar>& tape, Var x) const;

  /// Length after the block, or nullopt if the input is too short.
  static std::optional<std::size_t> output_length(std::size_t length);

 private:
  Parameter<Scalar>* filters_;
  Parameter<Scalar>* bias_;
};

/// Multi-head scaled dot-product self-attention without positional
/// encoding. Per head: softmax(Q Kᵀ / sqrt(d_k)) V with d_k = d_model / heads,
/// then heads are concatenated and projected by W_O. Projections carry no
/// bias.
template <typename Scalar>
class MultiHeadSelfAttention {
 public:
  MultiHeadSelfAttention(ParameterStore<Scalar>& store, const std::string& name, std::size_t d_model,
                         std::size_t heads, Rng& init_rng);

  /// x: [batch, tokens, d_model] -> same shape. If attention_weights is
  /// given it receives the [batch·heads, tokens, tokens] softmax node.
  Var forward(Tape<Scalar>& tape, Var x, Var* attention_weights = nullptr) const;

  std::size_t d_model() const { return d_model_; }
  std::size_t heads() const { return heads_; }

  const Parameter<Scalar>& query() const { return *query_; }
  const Parameter<Scalar>& key() const { return *key_; }
  const Parameter<Scalar>& value() const { return *value_; }
  const Parameter<Scalar>& output() const { return *output_; }

 private:
  std::size_t d_model_;
  std::size_t heads_;
  Parameter<Scalar>* query_;
  Parameter<Scalar>* key_;
  Parameter<Scalar>* value_;
  Parameter<Scalar>* output_;
};

/// Uniform tensor in ±limit drawn in double precision, so float and double
/// models built from the same seed agree up to rounding.
template <typename Scalar>
Tensor<Scalar> uniform_tensor(Shape shape, double limit, Rng& rng);

extern template class Dense<float>;
extern template class Dense<double>;
extern template class ConvBlock<float>;
extern template class ConvBlock<double>;
extern template class MultiHeadSelfAttention<float>;
extern template class MultiHeadSelfAttention<double>;

}  // namespace reno::nn
