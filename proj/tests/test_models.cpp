// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <fstream>
#include <map>

#include "doctest.h"
#include "json.hpp"
#include "reno/errors.hpp"
#include "reno/losses.hpp"
#include "reno/models.hpp"
#include "support.hpp"

using namespace reno;
using namespace reno::models;
using nn::Rng;
using nn::Tape;
using nn::Tensor;
using nn::Var;
using reno::testing::closed_form_param_count;
using reno::testing::random_tensor;

namespace {

ModelSpec make_spec(ModelKind kind, std::vector<std::size_t> dims, std::size_t classes = 6) {
  ModelSpec spec;
  spec.kind = kind;
  spec.input_dims = std::move(dims);
  spec.num_classes = classes;
  return spec;
}

template <typename Scalar>
typename Network<Scalar>::Output run(const Network<Scalar>& net, Tape<Scalar>& tape, std::size_t batch, Rng& rng,
                                     bool training = false) {
  std::vector<Var> inputs;
  for (std::size_t d : net.spec().input_dims) inputs.push_back(tape.constant(random_tensor<Scalar>({batch, d}, rng)));
  Rng dropout_rng(17);
  return net.forward(tape, inputs, training, dropout_rng);
}

void check_simplex_rows(const Tensor<float>& probs, std::size_t rows, std::size_t classes) {
  REQUIRE(probs.shape() == nn::Shape{rows, classes});
  for (std::size_t r = 0; r < rows; ++r) {
    double total = 0.0;
    for (std::size_t c = 0; c < classes; ++c) {
      CHECK(probs[r * classes + c] >= 0.0f);
      total += probs[r * classes + c];
    }
    CHECK(std::abs(total - 1.0) <= 1e-5);
  }
}

std::map<std::string, nn::Shape> shapes_by_name(const Network<float>& net) {
  std::map<std::string, nn::Shape> out;
  for (const auto& p : net.params()) out[p.name] = p.value.shape();
  return out;
}

}  // namespace

TEST_CASE("model kind names") {
  CHECK(parse_model_kind("reno") == ModelKind::RENO);
  CHECK(parse_model_kind("CONCAT") == ModelKind::CONCAT);
  CHECK(to_string(ModelKind::CNN) == "CNN");
  CHECK_THROWS_AS(parse_model_kind("lstm"), ConfigError);
}

TEST_CASE("spec validation") {
  CHECK_THROWS_AS(make_spec(ModelKind::FCN, {768, 768}).validate(), ConfigError);
  CHECK_THROWS_AS(make_spec(ModelKind::RENO, {768}).validate(), ConfigError);
  CHECK_THROWS_AS(make_spec(ModelKind::CNN, {15}).validate(), InputTooShortError);
  CHECK_NOTHROW(make_spec(ModelKind::CNN, {16}).validate());
  CHECK_THROWS_AS(make_spec(ModelKind::FCN, {10}, 1).validate(), ConfigError);
  auto odd_heads = make_spec(ModelKind::RENO, {64, 64});
  odd_heads.heads = 3;
  CHECK_THROWS_AS(odd_heads.validate(), ConfigError);
  CHECK_THROWS_AS(build_reno<float>(make_spec(ModelKind::CONCAT, {64, 64}), 1), ConfigError);
  CHECK_THROWS_AS(build_fcn<float>(make_spec(ModelKind::CNN, {64}), 1), ConfigError);
}

TEST_CASE("spec json round trip") {
  auto spec = make_spec(ModelKind::RENO, {3840, 768}, 12);
  spec.dropout_rate = 0.25;
  nlohmann::json j = spec;
  for (const char* key : {"kind", "input_dims", "num_classes", "dropout_rate", "heads", "common_dim", "pooled_tokens"})
    CHECK(j.contains(key));
  CHECK(j.at("kind") == "RENO");
  CHECK(j.get<ModelSpec>() == spec);
}

TEST_CASE("branch sequence lengths") {
  CHECK(conv_branch_lengths(768) == std::vector<std::size_t>{766, 383, 381, 190});
  CHECK(conv_branch_lengths(16) == std::vector<std::size_t>{14, 7, 5, 2});
}

TEST_CASE("parameter counts match the closed form") {
  // 768·512+512 + 512·128+128 + 128·6+6
  CHECK(param_count(build_fcn<float>(make_spec(ModelKind::FCN, {768}), 1)) == 460166);
  CHECK(param_count(build_fcn<float>(make_spec(ModelKind::FCN, {3840}, 13), 1)) == 2033933);

  for (auto dims : {std::vector<std::size_t>{768}, std::vector<std::size_t>{3840}, std::vector<std::size_t>{960}}) {
    for (ModelKind kind : {ModelKind::FCN, ModelKind::CNN}) {
      auto spec = make_spec(kind, dims, 7);
      CHECK(param_count(Network<float>::build(spec, 2)) == closed_form_param_count(spec));
    }
  }
  for (auto dims : {std::vector<std::size_t>{768, 768}, std::vector<std::size_t>{3840, 768}}) {
    for (ModelKind kind : {ModelKind::CONCAT, ModelKind::RENO}) {
      auto spec = make_spec(kind, dims, 12);
      CHECK(param_count(Network<float>::build(spec, 2)) == closed_form_param_count(spec));
    }
  }
  CHECK(param_count(Network<float>{}) == 0);
}

TEST_CASE("convolution parameters") {
  auto net = build_cnn<float>(make_spec(ModelKind::CNN, {768}), 3);
  std::size_t conv = 0;
  for (const auto& p : net.params())
    if (p.name.find(".conv") != std::string::npos) conv += p.value.size();
  CHECK(conv == 6336);
}

TEST_CASE("counts do not depend on the input width for convolutional models") {
  CHECK(param_count(build_cnn<float>(make_spec(ModelKind::CNN, {768}), 1)) ==
        param_count(build_cnn<float>(make_spec(ModelKind::CNN, {3840}), 1)));
  CHECK(param_count(build_reno<float>(make_spec(ModelKind::RENO, {768, 768}), 1)) ==
        param_count(build_reno<float>(make_spec(ModelKind::RENO, {3840, 960}), 1)));
}

TEST_CASE("RENO without attention is the concatenation baseline") {
  auto reno = build_reno<float>(make_spec(ModelKind::RENO, {96, 64}), 4);
  auto concat = build_concat_fusion<float>(make_spec(ModelKind::CONCAT, {96, 64}), 4);
  auto reno_shapes = shapes_by_name(reno);
  std::erase_if(reno_shapes, [](const auto& kv) { return kv.first.find("attention") != std::string::npos; });
  CHECK(reno_shapes == shapes_by_name(concat));
  CHECK(param_count(concat) < param_count(reno));
}

TEST_CASE("every model maps inputs to simplex rows") {
  Rng rng(5);
  for (auto spec : {make_spec(ModelKind::FCN, {48}), make_spec(ModelKind::CNN, {48}),
                    make_spec(ModelKind::CONCAT, {48, 40}), make_spec(ModelKind::RENO, {48, 40})}) {
    auto net = Network<float>::build(spec, 6);
    Tape<float> tape;
    auto out = run(net, tape, 5, rng, true);
    check_simplex_rows(tape.value(out.probs), 5, 6);
    CHECK(out.alignment_taps.has_value() == (spec.kind == ModelKind::RENO));
  }
}

TEST_CASE("RENO taps for heterogeneous widths") {
  Rng rng(7);
  auto net = build_reno<float>(make_spec(ModelKind::RENO, {3840, 768}, 12), 8);
  Tape<float> tape;
  auto out = run(net, tape, 2, rng);
  REQUIRE(out.alignment_taps.has_value());
  CHECK(tape.value(out.alignment_taps->first).shape() == nn::Shape{2, 128});
  CHECK(tape.value(out.alignment_taps->second).shape() == nn::Shape{2, 128});
  check_simplex_rows(tape.value(out.probs), 2, 12);
  // Fused width entering the head is two tokens of 128.
  CHECK(net.params().find("head.hidden1.weight")->value.dim(0) == 256);
}

TEST_CASE("concat fused width") {
  auto net = build_concat_fusion<float>(make_spec(ModelKind::CONCAT, {768, 768}), 1);
  CHECK(net.params().find("head.hidden1.weight")->value.dim(0) == 256);
}

TEST_CASE("wrong view count or width is rejected") {
  auto net = build_reno<float>(make_spec(ModelKind::RENO, {32, 32}), 1);
  Tape<float> tape;
  Rng rng(1);
  std::vector<Var> one{tape.constant(Tensor<float>({2, 32}))};
  CHECK_THROWS_AS(net.forward(tape, one, false, rng), DimensionError);
  std::vector<Var> narrow{tape.constant(Tensor<float>({2, 32})), tape.constant(Tensor<float>({2, 31}))};
  CHECK_THROWS_AS(net.forward(tape, narrow, false, rng), DimensionError);
}

TEST_CASE("construction and evaluation are deterministic") {
  for (auto spec : {make_spec(ModelKind::FCN, {40}), make_spec(ModelKind::CNN, {40}),
                    make_spec(ModelKind::CONCAT, {40, 24}), make_spec(ModelKind::RENO, {40, 24})}) {
    auto a = Network<float>::build(spec, 77);
    auto b = Network<float>::build(spec, 77);
    CHECK(a.params().snapshot() == b.params().snapshot());
    CHECK_FALSE(a.params().snapshot() == Network<float>::build(spec, 78).params().snapshot());

    Rng data(3);
    std::vector<Tensor<float>> inputs;
    for (std::size_t d : spec.input_dims) inputs.push_back(random_tensor<float>({4, d}, data));
    auto evaluate = [&](Rng dropout_rng) {
      Tape<float> tape;
      std::vector<Var> vars;
      for (const auto& t : inputs) vars.push_back(tape.constant(t));
      return tape.value(a.forward(tape, vars, false, dropout_rng).probs);
    };
    CHECK(evaluate(Rng(1)) == evaluate(Rng(2)));
  }
}

TEST_CASE("alignment gradient reaches the convolutions of both branches") {
  Rng rng(9);
  auto net = build_reno<double>(make_spec(ModelKind::RENO, {40, 28}, 3), 10);
  Tape<double> tape;
  auto out = run(net, tape, 3, rng);
  auto [a, b] = *out.alignment_taps;
  net.params().zero_grad();
  tape.backward(losses::renyi_divergence_loss(tape, a, b, losses::LossConfig{}));
  for (const char* name : {"branch0.conv1.weight", "branch0.conv2.weight", "branch1.conv1.weight",
                           "branch1.conv2.weight"}) {
    const auto& g = net.params().find(name)->grad;
    double norm = 0.0;
    for (double v : g.data()) norm += v * v;
    CHECK_MESSAGE(norm > 0.0, name);
  }
  // The head is not on the alignment path.
  for (double v : net.params().find("head.output.weight")->grad.data()) CHECK(v == 0.0);
}

TEST_CASE("joint objective reaches every parameter") {
  Rng rng(12);
  auto net = build_reno<double>(make_spec(ModelKind::RENO, {40, 28}, 3), 13);
  Tape<double> tape;
  auto out = run(net, tape, 4, rng);
  const std::vector<int> labels{0, 1, 2, 0};
  Var ce = losses::cross_entropy(tape, out.probs, labels);
  Var rd = losses::renyi_divergence_loss(tape, out.alignment_taps->first, out.alignment_taps->second, {});
  net.params().zero_grad();
  tape.backward(losses::joint_loss(tape, ce, rd, 0.4));
  for (const auto& p : net.params()) {
    bool any = false;
    for (double v : p.grad.data()) any = any || v != 0.0;
    CHECK_MESSAGE(any, p.name);
  }
}

TEST_CASE("checkpoint round trip") {
  const auto dir = reno::testing::scratch_dir("checkpoint");
  auto net = build_reno<float>(make_spec(ModelKind::RENO, {40, 24}, 4), 21);
  save_checkpoint(dir / "m.nvmd", net);
  auto loaded = load_checkpoint(dir / "m.nvmd");
  CHECK(loaded.spec() == net.spec());
  CHECK(loaded.params().snapshot() == net.params().snapshot());

  std::ofstream(dir / "bad.nvmd") << "NOPE and more bytes";
  CHECK_THROWS_AS(load_checkpoint(dir / "bad.nvmd"), FormatError);
  CHECK_THROWS_AS(load_checkpoint(dir / "missing.nvmd"), DataError);
}
