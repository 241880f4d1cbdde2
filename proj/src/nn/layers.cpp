// SPDX-License-Identifier: Apache-2.0
#include "reno/nn/layers.hpp"

#include <cmath>

#include "reno/errors.hpp"

namespace reno::nn {

template <typename Scalar>
Tensor<Scalar> uniform_tensor(Shape shape, double limit, Rng& rng) {
  Tensor<Scalar> out(std::move(shape));
  for (auto& v : out.data()) v = static_cast<Scalar>(rng.uniform(-limit, limit));
  return out;
}

template <typename Scalar>
Dense<Scalar>::Dense(ParameterStore<Scalar>& store, const std::string& name, std::size_t in_features,
                     std::size_t out_features, Rng& init_rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(in_features + out_features));
  weights_ = &store.add(name + ".weight", uniform_tensor<Scalar>({in_features, out_features}, limit, init_rng));
  bias_ = &store.add(name + ".bias", Tensor<Scalar>({out_features}));
}

template <typename Scalar>
Var Dense<Scalar>::forward(Tape<Scalar>& tape, Var x) const {
  return linear(tape, x, tape.parameter(*weights_), tape.parameter(*bias_));
}

template <typename Scalar>
ConvBlock<Scalar>::ConvBlock(ParameterStore<Scalar>& store, const std::string& name, std::size_t in_channels,
                             std::size_t filters, Rng& init_rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>((in_channels + filters) * kKernel));
  filters_ = &store.add(name + ".weight", uniform_tensor<Scalar>({filters, in_channels, kKernel}, limit, init_rng));
  bias_ = &store.add(name + ".bias", Tensor<Scalar>({filters}));
}

template <typename Scalar>
std::optional<std::size_t> ConvBlock<Scalar>::output_length(std::size_t length) {
  if (length < kKernel + kPoolWindow - 1) return std::nullopt;
  return (length - kKernel + 1) / kPoolWindow;
}

template <typename Scalar>
Var ConvBlock<Scalar>::forward(Tape<Scalar>& tape, Var x) const {
  Var conv = conv1d(tape, x, tape.parameter(*filters_), tape.parameter(*bias_));
  return max_pool1d(tape, relu(tape, conv), kPoolWindow, kPoolWindow);
}

template <typename Scalar>
MultiHeadSelfAttention<Scalar>::MultiHeadSelfAttention(ParameterStore<Scalar>& store, const std::string& name,
                                                       std::size_t d_model, std::size_t heads, Rng& init_rng)
    : d_model_(d_model), heads_(heads) {
  if (heads == 0 || d_model % heads != 0) {
    throw ConfigError("attention: d_model " + std::to_string(d_model) + " is not divisible by " +
                      std::to_string(heads) + " heads");
  }
  const double limit = std::sqrt(6.0 / static_cast<double>(2 * d_model));
  query_ = &store.add(name + ".query", uniform_tensor<Scalar>({d_model, d_model}, limit, init_rng));
  key_ = &store.add(name + ".key", uniform_tensor<Scalar>({d_model, d_model}, limit, init_rng));
  value_ = &store.add(name + ".value", uniform_tensor<Scalar>({d_model, d_model}, limit, init_rng));
  output_ = &store.add(name + ".output", uniform_tensor<Scalar>({d_model, d_model}, limit, init_rng));
}

template <typename Scalar>
Var MultiHeadSelfAttention<Scalar>::forward(Tape<Scalar>& tape, Var x, Var* attention_weights) const {
  const auto& shape = tape.value(x).shape();
  if (shape.size() != 3 || shape[2] != d_model_) {
    throw DimensionError("attention: expected [batch, tokens, " + std::to_string(d_model_) + "], got " +
                         to_string(shape));
  }
  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(d_model_ / heads_));
  Var q = split_heads(tape, linear(tape, x, tape.parameter(*query_), std::nullopt), heads_);
  Var k = split_heads(tape, linear(tape, x, tape.parameter(*key_), std::nullopt), heads_);
  Var v = split_heads(tape, linear(tape, x, tape.parameter(*value_), std::nullopt), heads_);
  Var scores = scale(tape, batched_matmul(tape, q, k, /*transpose_rhs=*/true), inv_sqrt_dk);
  Var weights = softmax(tape, scores);
  if (attention_weights) *attention_weights = weights;
  Var context = merge_heads(tape, batched_matmul(tape, weights, v, /*transpose_rhs=*/false), heads_);
  return linear(tape, context, tape.parameter(*output_), std::nullopt);
}

template Tensor<float> uniform_tensor<float>(Shape, double, Rng&);
template Tensor<double> uniform_tensor<double>(Shape, double, Rng&);
template class Dense<float>;
template class Dense<double>;
template class ConvBlock<float>;
template class ConvBlock<double>;
template class MultiHeadSelfAttention<float>;
template class MultiHeadSelfAttention<double>;

}  // namespace reno::nn
