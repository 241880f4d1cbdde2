// SPDX-License-Identifier: Apache-2.0
#include "reno/gradcheck_suite.hpp"

#include <array>
#include <functional>

#include "reno/losses.hpp"
#include "reno/models.hpp"
#include "reno/nn/layers.hpp"
#include "reno/nn/ops.hpp"

namespace reno {

namespace {

using nn::ParameterStore;
using nn::Rng;
using nn::Tape;
using nn::Tensor;
using nn::Var;

Tensor<double> random_tensor(nn::Shape shape, Rng& rng, double scale = 1.0) {
  Tensor<double> t(std::move(shape));
  for (auto& v : t.data()) v = scale * rng.normal();
  return t;
}

// Scalar readout Σ x_i r_i with a fixed random r, so every output element
// carries a distinct weight.
Var readout(Tape<double>& tape, Var x, const Tensor<double>& weights) {
  const std::size_t n = tape.value(x).size();
  Var flat = nn::reshape(tape, x, {1, n});
  return nn::linear(tape, flat, tape.constant(weights.reshaped({n, 1})), std::nullopt);
}

// Builds the graph from scratch for every evaluation, as the checker needs.
using GraphFn = std::function<Var(Tape<double>&)>;

GradCheckCase check(std::string name, ParameterStore<double>& store, const GraphFn& graph, double tolerance,
                    std::uint64_t seed) {
  nn::LossFn loss = [&](bool with_gradients, nn::PiecewisePattern* pattern) {
    Tape<double> tape;
    tape.set_pattern(pattern);
    Var out = graph(tape);
    if (with_gradients) {
      store.zero_grad();
      tape.backward(out);
    }
    return tape.value(out)[0];
  };
  nn::GradCheckOptions options;
  options.tolerance = tolerance;
  options.seed = seed;
  return {std::move(name), tolerance, nn::grad_check(store, loss, options)};
}

}  // namespace

std::vector<GradCheckCase> run_gradcheck_suite(std::uint64_t seed) {
  std::vector<GradCheckCase> cases;
  Rng rng(seed);
  const losses::LossConfig loss_config;

  {
    ParameterStore<double> store;
    auto& input = store.add("input", random_tensor({3, 5}, rng));
    nn::Dense<double> dense(store, "dense", 5, 4, rng);
    store[2].value = random_tensor({4}, rng, 0.5);  // non-zero bias
    const auto r = random_tensor({12}, rng);
    cases.push_back(check("dense", store, [&](Tape<double>& t) {
      return readout(t, dense.forward(t, t.parameter(input)), r);
    }, kLayerTolerance, seed));
  }
  {
    ParameterStore<double> store;
    auto& input = store.add("input", random_tensor({3, 6}, rng));
    const auto r = random_tensor({18}, rng);
    cases.push_back(check("relu", store, [&](Tape<double>& t) {
      return readout(t, nn::relu(t, t.parameter(input)), r);
    }, kLayerTolerance, seed));
  }
  {
    ParameterStore<double> store;
    auto& input = store.add("input", random_tensor({2, 3, 11}, rng));
    nn::ConvBlock<double> block(store, "conv_block", 3, 4, rng);
    store[2].value = random_tensor({4}, rng, 0.3);
    const auto r = random_tensor({2 * 4 * 4}, rng);
    cases.push_back(check("conv_block", store, [&](Tape<double>& t) {
      return readout(t, block.forward(t, t.parameter(input)), r);
    }, kLayerTolerance, seed));
  }
  {
    ParameterStore<double> store;
    auto& input = store.add("input", random_tensor({2, 3, 10}, rng));
    const auto r = random_tensor({2 * 3 * 4}, rng);
    cases.push_back(check("adaptive_max_pool", store, [&](Tape<double>& t) {
      return readout(t, nn::adaptive_max_pool1d(t, t.parameter(input), 4), r);
    }, kLayerTolerance, seed));
  }
  {
    ParameterStore<double> store;
    auto& input = store.add("input", random_tensor({4, 5}, rng, 2.0));
    const auto r = random_tensor({20}, rng);
    cases.push_back(check("softmax", store, [&](Tape<double>& t) {
      return readout(t, nn::softmax(t, t.parameter(input)), r);
    }, kLayerTolerance, seed));
  }
  {
    ParameterStore<double> store;
    auto& input = store.add("input", random_tensor({4, 6}, rng));
    const std::uint64_t mask_seed = rng.next_u64();
    const auto r = random_tensor({24}, rng);
    cases.push_back(check("dropout", store, [&](Tape<double>& t) {
      Rng mask_rng(mask_seed);  // same mask on every evaluation
      return readout(t, nn::dropout(t, t.parameter(input), 0.3, mask_rng, true), r);
    }, kLayerTolerance, seed));
  }
  {
    ParameterStore<double> store;
    auto& input = store.add("input", random_tensor({2, 5, 8}, rng));
    nn::MultiHeadSelfAttention<double> attention(store, "attention", 8, 2, rng);
    const auto r = random_tensor({2 * 5 * 8}, rng);
    cases.push_back(check("multi_head_self_attention", store, [&](Tape<double>& t) {
      return readout(t, attention.forward(t, t.parameter(input)), r);
    }, kLayerTolerance, seed));
  }
  {
    ParameterStore<double> store;
    auto& input = store.add("input", random_tensor({5, 7}, rng));
    nn::Dense<double> dense(store, "dense", 7, 4, rng);
    const std::vector<int> labels{0, 3, 1, 2, 3};
    cases.push_back(check("dense+softmax+cross_entropy", store, [&](Tape<double>& t) {
      Var probs = nn::softmax(t, dense.forward(t, t.parameter(input)));
      return losses::cross_entropy(t, probs, labels);
    }, kLayerTolerance, seed));
  }
  {
    ParameterStore<double> store;
    auto& fx = store.add("feat_x", random_tensor({3, 6}, rng));
    auto& fy = store.add("feat_y", random_tensor({3, 6}, rng));
    cases.push_back(check("renyi_divergence_loss", store, [&](Tape<double>& t) {
      return losses::renyi_divergence_loss(t, t.parameter(fx), t.parameter(fy), loss_config);
    }, kLayerTolerance, seed));
  }
  {
    ParameterStore<double> store;
    auto& logits = store.add("logits", random_tensor({4, 3}, rng));
    auto& fx = store.add("feat_x", random_tensor({4, 5}, rng));
    auto& fy = store.add("feat_y", random_tensor({4, 5}, rng));
    const std::vector<int> labels{2, 0, 1, 1};
    cases.push_back(check("joint_loss", store, [&](Tape<double>& t) {
      Var ce = losses::cross_entropy(t, nn::softmax(t, t.parameter(logits)), labels);
      Var rd = losses::renyi_divergence_loss(t, t.parameter(fx), t.parameter(fy), loss_config);
      return losses::joint_loss(t, ce, rd, loss_config.lambda);
    }, kLayerTolerance, seed));
  }
  {
    models::ModelSpec spec;
    spec.kind = models::ModelKind::RENO;
    spec.input_dims = {24, 40};
    spec.num_classes = 3;
    auto model = models::build_reno<double>(spec, rng.next_u64());
    const auto xa = random_tensor({4, 24}, rng);
    const auto xb = random_tensor({4, 40}, rng);
    const std::vector<int> labels{0, 1, 2, 1};
    cases.push_back(check("reno_end_to_end", model.params(), [&](Tape<double>& t) {
      Rng unused(0);
      const std::array<Var, 2> inputs{t.constant(xa), t.constant(xb)};
      const auto out = model.forward(t, inputs, /*training=*/false, unused);
      Var ce = losses::cross_entropy(t, out.probs, labels);
      Var rd = losses::renyi_divergence_loss(t, out.alignment_taps->first, out.alignment_taps->second, loss_config);
      return losses::joint_loss(t, ce, rd, loss_config.lambda);
    }, kEndToEndTolerance, seed));
  }
  return cases;
}

}  // namespace reno
