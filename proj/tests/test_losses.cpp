// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "doctest.h"
#include "reno/errors.hpp"
#include "reno/losses.hpp"
#include "reno/nn/ops.hpp"
#include "support.hpp"

using namespace reno;
using namespace reno::nn;
using losses::LossConfig;
using reno::testing::random_tensor;

namespace {

double ce_value(const Tensor<double>& probs, const std::vector<int>& labels) {
  Tape<double> tape;
  return tape.value(losses::cross_entropy(tape, tape.constant(probs), labels))[0];
}

double rd_value(const Tensor<double>& zx, const Tensor<double>& zy, const LossConfig& cfg) {
  Tape<double> tape;
  return tape.value(losses::renyi_divergence(tape, tape.constant(zx), tape.constant(zy), cfg))[0];
}

double rd_loss_value(const Tensor<double>& fx, const Tensor<double>& fy, const LossConfig& cfg) {
  Tape<double> tape;
  return tape.value(losses::renyi_divergence_loss(tape, tape.constant(fx), tape.constant(fy), cfg))[0];
}

// Random point on the simplex with M entries.
Tensor<double> random_distribution(std::size_t m, Rng& rng) {
  Tensor<double> z({1, m});
  double total = 0.0;
  for (std::size_t j = 0; j < m; ++j) total += z[j] = -std::log(1.0 - rng.uniform());
  for (std::size_t j = 0; j < m; ++j) z[j] /= total;
  return z;
}

}  // namespace

TEST_CASE("loss config validation") {
  LossConfig cfg;
  CHECK(cfg.beta == 2.0);
  CHECK(cfg.delta == 0.2);
  CHECK(cfg.lambda == 0.4);
  CHECK_NOTHROW(cfg.validate());
  CHECK_THROWS_AS((LossConfig{1.0, 0.2, 0.4}.validate()), ConfigError);
  CHECK_THROWS_AS((LossConfig{2.0, 0.0, 0.4}.validate()), ConfigError);
  CHECK_THROWS_AS((LossConfig{2.0, 0.2, 1.5}.validate()), ConfigError);
  CHECK_THROWS_AS((LossConfig{2.0, 0.2, -0.1}.validate()), ConfigError);
}

TEST_CASE("cross-entropy worked values") {
  CHECK(ce_value(Tensor<double>({1, 3}, {0, 1, 0}), {1}) <= 1e-7);
  CHECK(ce_value(Tensor<double>({2, 6}, 1.0 / 6.0), {0, 5}) == doctest::Approx(std::log(6.0)).epsilon(1e-10));
  CHECK(std::log(6.0) == doctest::Approx(1.7918).epsilon(1e-4));
  const double two = ce_value(Tensor<double>({2, 2}, {0.5, 0.5, 0.75, 0.25}), {0, 1});
  CHECK(two == doctest::Approx((std::log(2.0) + std::log(4.0)) / 2.0).epsilon(1e-10));
  CHECK(two == doctest::Approx(1.0397).epsilon(1e-4));
}

TEST_CASE("cross-entropy rejects bad labels and off-simplex rows") {
  Tape<double> tape;
  Var p = tape.constant(Tensor<double>({2, 3}, 1.0 / 3.0));
  try {
    losses::cross_entropy(tape, p, std::vector<int>{0, 3});
    FAIL("expected LabelError");
  } catch (const LabelError& e) {
    CHECK(std::string(e.what()).find('3') != std::string::npos);
  }
  CHECK_THROWS_AS(losses::cross_entropy(tape, p, std::vector<int>{-1, 0}), LabelError);
  Var off = tape.constant(Tensor<double>({1, 2}, {0.6, 0.6}));
  CHECK_THROWS_AS(losses::cross_entropy(tape, off, std::vector<int>{0}), DimensionError);
}

TEST_CASE("cross-entropy gradient reaches the logits through softmax") {
  Rng rng(2);
  Tape<double> tape;
  Var logits = tape.variable(random_tensor<double>({3, 4}, rng));
  Var loss = losses::cross_entropy(tape, softmax(tape, logits), std::vector<int>{1, 0, 3});
  tape.backward(loss);
  // d/dz of mean CE through softmax is (p - onehot) / n.
  const auto p = tape.value(softmax(tape, logits));
  const std::vector<int> labels{1, 0, 3};
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 4; ++c) {
      const double expected = (p[r * 4 + c] - (static_cast<int>(c) == labels[r] ? 1.0 : 0.0)) / 3.0;
      CHECK(tape.grad(logits)[r * 4 + c] == doctest::Approx(expected).epsilon(1e-9));
    }
}

TEST_CASE("renyi divergence worked values") {
  const LossConfig cfg;
  SUBCASE("identical logits, M = 4") {
    Rng rng(3);
    auto logits = random_tensor<double>({1, 4}, rng);
    CHECK(rd_loss_value(logits, logits, cfg) == doctest::Approx(std::log(1.8)).epsilon(1e-12));
    CHECK(std::log(1.8) == doctest::Approx(0.5878).epsilon(1e-4));
  }
  SUBCASE("injected distributions") {
    const double value = rd_value(Tensor<double>({1, 2}, {0.7, 0.3}), Tensor<double>({1, 2}, {0.3, 0.7}), cfg);
    const double sum = 0.81 / 0.5 + 0.25 / 0.9;
    CHECK(sum == doctest::Approx(1.89778).epsilon(1e-5));
    CHECK(value == doctest::Approx(std::log(sum)).epsilon(1e-12));
    CHECK(value == doctest::Approx(0.6407).epsilon(1e-4));
  }
  SUBCASE("batch mean") {
    Tensor<double> zx({2, 2}, {0.7, 0.3, 0.5, 0.5});
    Tensor<double> zy({2, 2}, {0.3, 0.7, 0.5, 0.5});
    const double first = std::log(0.81 / 0.5 + 0.25 / 0.9);
    const double second = std::log(1.4);
    CHECK(rd_value(zx, zy, cfg) == doctest::Approx((first + second) / 2.0).epsilon(1e-12));
  }
  SUBCASE("width mismatch") {
    Tape<double> tape;
    CHECK_THROWS_AS(losses::renyi_divergence_loss(tape, tape.constant(Tensor<double>({1, 3})),
                                                  tape.constant(Tensor<double>({1, 4})), cfg),
                    DimensionError);
  }
}

TEST_CASE("self-divergence identity across orders, widths and smoothing") {
  Rng rng(4);
  for (double beta : {1.5, 2.0, 3.0}) {
    for (double delta : {0.05, 0.2}) {
      for (int trial = 0; trial < 4; ++trial) {
        const std::size_t m = 2 + rng.below(4095);
        const LossConfig cfg{beta, delta, 0.4};
        auto logits = random_tensor<double>({2, m}, rng, 3.0);
        const double expected = std::log(1.0 + static_cast<double>(m) * delta) / (beta - 1.0);
        CHECK(losses::self_divergence(m, cfg) == doctest::Approx(expected).epsilon(1e-14));
        CHECK(std::abs(rd_loss_value(logits, logits, cfg) - expected) <= 1e-6);
      }
    }
  }
}

TEST_CASE("divergence lower bound over random pairs") {
  const LossConfig cfg;
  Rng rng(5);
  std::size_t asymmetric = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t m = 2 + rng.below(63);
    auto zx = random_distribution(m, rng);
    auto zy = random_distribution(m, rng);
    const double bound = std::log(1.0 + static_cast<double>(m) * cfg.delta);
    const double forward = rd_value(zx, zy, cfg);
    CHECK(forward >= bound - 1e-9);
    CHECK(forward > bound);
    CHECK(std::abs(rd_value(zx, zx, cfg) - bound) <= 1e-12);
    if (std::abs(forward - rd_value(zy, zx, cfg)) > 1e-9) ++asymmetric;
  }
  // Recorded only; the divergence is not symmetric in general.
  MESSAGE("asymmetric pairs: " << asymmetric << " of 1000");
}

TEST_CASE("divergence gradients reach both inputs") {
  Rng rng(6);
  Tape<double> tape;
  Var fx = tape.variable(random_tensor<double>({3, 8}, rng));
  Var fy = tape.variable(random_tensor<double>({3, 8}, rng));
  tape.backward(losses::renyi_divergence_loss(tape, fx, fy, LossConfig{}));
  for (Var v : {fx, fy}) {
    double norm = 0.0;
    for (double g : tape.grad(v).data()) norm += g * g;
    CHECK(norm > 0.0);
  }
  // Softmax shift invariance makes each row's gradient sum to zero.
  for (std::size_t r = 0; r < 3; ++r) {
    double total = 0.0;
    for (std::size_t c = 0; c < 8; ++c) total += tape.grad(fx)[r * 8 + c];
    CHECK(std::abs(total) <= 1e-12);
  }
}

TEST_CASE("joint loss") {
  CHECK(losses::joint_loss(1.3, 0.8, 1.0) == 1.3);
  CHECK(losses::joint_loss(1.3, 0.8, 0.0) == 0.8);
  CHECK(std::abs(losses::joint_loss(1.0, 0.5, 0.4) - 0.7) <= 1e-7);
  CHECK_THROWS_AS(losses::joint_loss(1.0, 0.5, 1.2), ConfigError);
  CHECK_THROWS_AS(losses::joint_loss(NAN, 0.5, 0.4), NumericError);

  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const double ce = rng.uniform(0.0, 5.0);
    const double rd = rng.uniform(0.0, 5.0);
    const double lambda = rng.uniform();
    const double a = rng.uniform(-3.0, 3.0);
    CHECK(std::abs(losses::joint_loss(a * ce, a * rd, lambda) - a * losses::joint_loss(ce, rd, lambda)) <= 1e-7);
  }

  SUBCASE("tape form distributes gradient linearly") {
    Tape<double> tape;
    Var ce = tape.variable(Tensor<double>::scalar(1.0));
    Var rd = tape.variable(Tensor<double>::scalar(0.5));
    Var joint = losses::joint_loss(tape, ce, rd, 0.4);
    CHECK(std::abs(tape.value(joint)[0] - 0.7) <= 1e-7);
    tape.backward(joint);
    CHECK(tape.grad(ce)[0] == doctest::Approx(0.4));
    CHECK(tape.grad(rd)[0] == doctest::Approx(0.6));
  }
}
