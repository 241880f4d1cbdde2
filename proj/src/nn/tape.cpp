// SPDX-License-Identifier: Apache-2.0
#include "reno/nn/tape.hpp"

#include "reno/errors.hpp"

namespace reno::nn {

const std::vector<std::size_t>& PiecewisePattern::next(std::size_t expected_size) {
  if (cursor_ >= choices_.size() || choices_[cursor_].size() != expected_size) {
    throw DimensionError("piecewise pattern replay does not match the recorded graph");
  }
  return choices_[cursor_++];
}

template <typename Scalar>
Var Tape<Scalar>::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var{nodes_.size() - 1};
}

template <typename Scalar>
Var Tape<Scalar>::constant(Tensor<Scalar> value) {
  return push(Node{std::move(value), {}, {}, nullptr, false});
}

template <typename Scalar>
Var Tape<Scalar>::variable(Tensor<Scalar> value) {
  return push(Node{std::move(value), {}, {}, nullptr, true});
}

template <typename Scalar>
Var Tape<Scalar>::parameter(Parameter<Scalar>& parameter) {
  // The value is read through the parameter pointer, not copied.
  return push(Node{{}, {}, {}, &parameter, true});
}

template <typename Scalar>
Var Tape<Scalar>::record(Tensor<Scalar> value, std::initializer_list<Var> inputs, BackwardFn backward) {
  bool needs = false;
  for (Var in : inputs) needs = needs || nodes_.at(in.id).requires_grad;
  return push(Node{std::move(value), {}, needs ? std::move(backward) : BackwardFn{}, nullptr, needs});
}

template <typename Scalar>
const Tensor<Scalar>& Tape<Scalar>::value(Var v) const {
  const Node& node = nodes_.at(v.id);
  return node.parameter ? node.parameter->value : node.value;
}

template <typename Scalar>
Tensor<Scalar>& Tape<Scalar>::grad(Var v) {
  Node& node = nodes_.at(v.id);
  if (node.grad.empty()) node.grad = Tensor<Scalar>(value(v).shape());
  return node.grad;
}

template <typename Scalar>
void Tape<Scalar>::accumulate(Var v, const Tensor<Scalar>& delta) {
  if (!nodes_.at(v.id).requires_grad) return;
  Tensor<Scalar>& g = grad(v);
  if (g.size() != delta.size()) {
    throw DimensionError("gradient " + to_string(delta.shape()) + " does not match node " + to_string(g.shape()));
  }
  Scalar* dst = g.ptr();
  const Scalar* src = delta.ptr();
  for (std::size_t i = 0; i < g.size(); ++i) dst[i] += src[i];
}

template <typename Scalar>
void Tape<Scalar>::backward(Var loss) {
  if (value(loss).size() != 1) {
    throw DimensionError("backward() needs a scalar loss, got shape " + to_string(value(loss).shape()));
  }
  trace_.clear();
  grad(loss)[0] += Scalar{1};
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (!node.requires_grad || node.grad.empty()) continue;
    if (node.parameter) {
      Tensor<Scalar>& dst = node.parameter->grad;
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += node.grad[j];
    } else if (node.backward) {
      trace_.push_back(i);
      node.backward(*this, Var{i});
    }
  }
}

template class Tape<float>;
template class Tape<double>;

}  // namespace reno::nn
