// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "reno/nn/parameter.hpp"
#include "reno/nn/tensor.hpp"

namespace reno::nn {

/// Active pieces of the piecewise-linear ops (ReLU masks, max-pool argmax
/// positions) of one forward pass. In Record mode ops append what they chose;
/// in Replay mode they reuse the recorded choices in the same order, so the
/// network stays on one linear piece while parameters are perturbed.
class PiecewisePattern {
 public:
  enum class Mode { Record, Replay };

  void start_recording() {
    mode_ = Mode::Record;
    choices_.clear();
    cursor_ = 0;
  }
  void start_replay() {
    mode_ = Mode::Replay;
    cursor_ = 0;
  }
  Mode mode() const { return mode_; }

  void record(std::vector<std::size_t> choice) { choices_.push_back(std::move(choice)); }
  /// Next recorded choice; throws if the graph differs from the recording.
  const std::vector<std::size_t>& next(std::size_t expected_size);

 private:
  Mode mode_ = Mode::Record;
  std::vector<std::vector<std::size_t>> choices_;
  std::size_t cursor_ = 0;
};

/// Handle to a node recorded on a Tape.
struct Var {
  std::size_t id = 0;
};

/// Reverse-mode recording of one forward pass. Nodes are appended in
/// evaluation order, which is a topological order; backward() walks them in
/// exact reverse.
template <typename Scalar>
class Tape {
 public:
  /// Propagates the node's gradient into its inputs.
  using BackwardFn = std::function<void(Tape&, Var self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf without gradient.
  Var constant(Tensor<Scalar> value);
  /// Leaf whose gradient is kept for inspection after backward().
  Var variable(Tensor<Scalar> value);
  /// Leaf bound to a parameter; backward() accumulates into parameter.grad.
  Var parameter(Parameter<Scalar>& parameter);

  /// Records an operation result. requires_grad is inherited from inputs.
  Var record(Tensor<Scalar> value, std::initializer_list<Var> inputs, BackwardFn backward);

  const Tensor<Scalar>& value(Var v) const;
  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }

  /// Gradient buffer of a node, zero-allocated on first access.
  Tensor<Scalar>& grad(Var v);
  bool has_grad(Var v) const { return !nodes_[v.id].grad.empty(); }

  /// Adds delta into the gradient of v if v requires it.
  void accumulate(Var v, const Tensor<Scalar>& delta);

  /// Seeds d(loss)/d(loss) = 1 and runs every recorded backward function in
  /// reverse order. Loss must hold a single element.
  void backward(Var loss);

  /// Routes ReLU / max-pool decisions through pattern (may be null).
  void set_pattern(PiecewisePattern* pattern) { pattern_ = pattern; }
  PiecewisePattern* pattern() const { return pattern_; }

  std::size_t node_count() const { return nodes_.size(); }
  /// Node ids whose backward function ran during the last backward(), in
  /// visiting order.
  const std::vector<std::size_t>& backward_trace() const { return trace_; }

 private:
  struct Node {
    Tensor<Scalar> value;
    Tensor<Scalar> grad;
    BackwardFn backward;
    Parameter<Scalar>* parameter = nullptr;
    bool requires_grad = false;
  };

  Var push(Node node);

  std::vector<Node> nodes_;
  std::vector<std::size_t> trace_;
  PiecewisePattern* pattern_ = nullptr;
};

extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace reno::nn
