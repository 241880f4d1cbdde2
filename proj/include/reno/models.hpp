// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "reno/nn/layers.hpp"
#include "reno/nn/parameter.hpp"
#include "reno/nn/rng.hpp"
#include "reno/nn/tape.hpp"

namespace reno::models {

enum class ModelKind { FCN, CNN, CONCAT, RENO };

std::string to_string(ModelKind kind);
/// Accepts "FCN"/"fcn", etc. Throws ConfigError otherwise.
ModelKind parse_model_kind(const std::string& text);

/// Declarative network description.
struct ModelSpec {
  ModelKind kind = ModelKind::FCN;
  std::vector<std::size_t> input_dims;
  std::size_t num_classes = 2;
  double dropout_rate = 0.3;
  std::size_t heads = 2;
  std::size_t common_dim = 128;
  std::size_t pooled_tokens = 16;

  bool is_fusion() const { return kind == ModelKind::CONCAT || kind == ModelKind::RENO; }
  std::size_t view_count() const { return is_fusion() ? 2 : 1; }

  /// Throws ConfigError / InputTooShortError on an unusable spec.
  void validate() const;

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

void to_json(nlohmann::json& j, const ModelSpec& spec);
void from_json(const nlohmann::json& j, ModelSpec& spec);

// Layer widths shared by every model family.
inline constexpr std::size_t kConvFilters1 = 32;
inline constexpr std::size_t kConvFilters2 = 64;
inline constexpr std::size_t kHidden1 = 512;
inline constexpr std::size_t kHidden2 = 128;
inline constexpr std::size_t kMinConvInput = 16;

/// Sequence lengths through one convolutional branch, e.g. 768 ->
/// {766, 383, 381, 190}: conv1, pool1, conv2, pool2.
std::vector<std::size_t> conv_branch_lengths(std::size_t input_dim);

/// A built network: parameters plus the layer graph that consumes them.
template <typename Scalar>
class Network {
 public:
  struct Output {
    nn::Var probs;
    /// Branch features entering the alignment loss (RENO only).
    std::optional<std::pair<nn::Var, nn::Var>> alignment_taps;
  };

  /// Model with no layers and no parameters.
  Network() = default;
  Network(Network&&) noexcept = default;
  Network& operator=(Network&&) noexcept = default;

  /// Builds the network for spec with parameters initialized from seed.
  static Network build(const ModelSpec& spec, std::uint64_t seed);

  /// inputs: one [batch, input_dims[i]] node per view. Dropout is active only
  /// when training is set.
  Output forward(nn::Tape<Scalar>& tape, std::span<const nn::Var> inputs, bool training, nn::Rng& dropout_rng) const;

  const ModelSpec& spec() const { return spec_; }
  nn::ParameterStore<Scalar>& params() { return *params_; }
  const nn::ParameterStore<Scalar>& params() const { return *params_; }

 private:
  struct Branch {
    std::optional<nn::ConvBlock<Scalar>> conv1;
    std::optional<nn::ConvBlock<Scalar>> conv2;
    std::optional<nn::MultiHeadSelfAttention<Scalar>> attention;
    std::optional<nn::Dense<Scalar>> projection;
  };
  struct Head {
    nn::Dense<Scalar> hidden1;
    nn::Dense<Scalar> hidden2;
    nn::Dense<Scalar> output;
  };

  nn::Var run_branch(nn::Tape<Scalar>& tape, const Branch& branch, nn::Var x) const;

  ModelSpec spec_;
  std::unique_ptr<nn::ParameterStore<Scalar>> params_ = std::make_unique<nn::ParameterStore<Scalar>>();
  std::vector<Branch> branches_;
  std::optional<nn::MultiHeadSelfAttention<Scalar>> fusion_attention_;
  std::optional<Head> head_;
};

template <typename Scalar>
Network<Scalar> build_fcn(const ModelSpec& spec, std::uint64_t seed);
template <typename Scalar>
Network<Scalar> build_cnn(const ModelSpec& spec, std::uint64_t seed);
template <typename Scalar>
Network<Scalar> build_reno(const ModelSpec& spec, std::uint64_t seed);
template <typename Scalar>
Network<Scalar> build_concat_fusion(const ModelSpec& spec, std::uint64_t seed);

/// Number of trainable scalars.
template <typename Scalar>
std::size_t param_count(const Network<Scalar>& model) {
  return model.params().scalar_count();
}

/// Binary checkpoint: "NVMD" | u32 version | u32 spec-json length | spec json |
/// u32 parameter count | per parameter: u32 name length, name, u32 rank,
/// u32 extents, float32 values.
void save_checkpoint(const std::filesystem::path& path, const Network<float>& model);
Network<float> load_checkpoint(const std::filesystem::path& path);

extern template class Network<float>;
extern template class Network<double>;

}  // namespace reno::models
