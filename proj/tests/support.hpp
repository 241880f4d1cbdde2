// SPDX-License-Identifier: Apache-2.0
// Small helpers shared by the test binaries.
#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "reno/models.hpp"
#include "reno/nn/rng.hpp"
#include "reno/nn/tensor.hpp"

namespace reno::testing {

template <typename Scalar>
nn::Tensor<Scalar> random_tensor(nn::Shape shape, nn::Rng& rng, double scale = 1.0) {
  nn::Tensor<Scalar> t(shape);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<Scalar>(scale * rng.normal());
  return t;
}

/// Naive [m, k] x [k, n] product in double.
inline std::vector<double> matmul(const std::vector<double>& a, const std::vector<double>& b, std::size_t m,
                                  std::size_t k, std::size_t n) {
  std::vector<double> out(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t t = 0; t < k; ++t) out[i * n + j] += a[i * k + t] * b[t * n + j];
  return out;
}

/// Fresh scratch directory under the build tree.
inline std::filesystem::path scratch_dir(const std::string& name) {
#ifdef NVER_TEST_TMP
  std::filesystem::path root = NVER_TEST_TMP;
#else
  std::filesystem::path root = std::filesystem::temp_directory_path() / "nver_tests";
#endif
  auto dir = root / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// Parameter count written out layer by layer from the architecture
/// description, independent of the network builder.
inline std::size_t closed_form_param_count(const models::ModelSpec& spec) {
  const auto dense = [](std::size_t in, std::size_t out) { return in * out + out; };
  const auto conv = [](std::size_t in, std::size_t filters) { return in * filters * 3 + filters; };
  const auto attention = [](std::size_t d) { return 4 * d * d; };
  const std::size_t flat = 64 * spec.pooled_tokens;
  const std::size_t branch_convs = conv(1, 32) + conv(32, 64);
  const auto head = [&](std::size_t in) { return dense(in, 512) + dense(512, 128) + dense(128, spec.num_classes); };
  switch (spec.kind) {
    case models::ModelKind::FCN:
      return head(spec.input_dims.at(0));
    case models::ModelKind::CNN:
      return branch_convs + head(flat);
    case models::ModelKind::CONCAT:
      return 2 * (branch_convs + dense(flat, spec.common_dim)) + head(2 * spec.common_dim);
    case models::ModelKind::RENO:
      return 2 * (branch_convs + attention(64) + dense(flat, spec.common_dim)) + attention(spec.common_dim) +
             head(2 * spec.common_dim);
  }
  return 0;
}

}  // namespace reno::testing
