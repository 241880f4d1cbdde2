// SPDX-License-Identifier: Apache-2.0
#include "reno/models.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstring>
#include <fstream>

#include "reno/errors.hpp"
#include "reno/nn/ops.hpp"

namespace reno::models {

using nn::Tape;
using nn::Var;

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::FCN: return "FCN";
    case ModelKind::CNN: return "CNN";
    case ModelKind::CONCAT: return "CONCAT";
    case ModelKind::RENO: return "RENO";
  }
  return "?";
}

ModelKind parse_model_kind(const std::string& text) {
  std::string upper = text;
  std::ranges::transform(upper, upper.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  for (ModelKind kind : {ModelKind::FCN, ModelKind::CNN, ModelKind::CONCAT, ModelKind::RENO}) {
    if (to_string(kind) == upper) return kind;
  }
  throw ConfigError("unknown model kind '" + text + "' (expected fcn, cnn, concat or reno)");
}

std::vector<std::size_t> conv_branch_lengths(std::size_t input_dim) {
  if (input_dim < kMinConvInput) {
    throw InputTooShortError("convolutional models need input dimension >= " + std::to_string(kMinConvInput) +
                             ", got " + std::to_string(input_dim));
  }
  const std::size_t conv1 = input_dim - 2;
  const std::size_t pool1 = conv1 / 2;
  const std::size_t conv2 = pool1 - 2;
  return {conv1, pool1, conv2, conv2 / 2};
}

void ModelSpec::validate() const {
  if (input_dims.size() != view_count()) {
    throw ConfigError(to_string(kind) + " expects " + std::to_string(view_count()) + " input view(s), got " +
                      std::to_string(input_dims.size()));
  }
  for (std::size_t d : input_dims) {
    if (d == 0) throw ConfigError("input dimensions must be positive");
    if (kind != ModelKind::FCN) conv_branch_lengths(d);
  }
  if (num_classes < 2) throw ConfigError("num_classes must be at least 2, got " + std::to_string(num_classes));
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw ConfigError("dropout_rate must lie in [0, 1), got " + std::to_string(dropout_rate));
  }
  if (pooled_tokens == 0 || common_dim == 0 || heads == 0) {
    throw ConfigError("pooled_tokens, common_dim and heads must be positive");
  }
  if (kind == ModelKind::RENO && (kConvFilters2 % heads != 0 || common_dim % heads != 0)) {
    throw ConfigError("attention widths " + std::to_string(kConvFilters2) + " and " + std::to_string(common_dim) +
                      " must be divisible by heads = " + std::to_string(heads));
  }
}

void to_json(nlohmann::json& j, const ModelSpec& spec) {
  j = nlohmann::json{{"kind", to_string(spec.kind)},
                     {"input_dims", spec.input_dims},
                     {"num_classes", spec.num_classes},
                     {"dropout_rate", spec.dropout_rate},
                     {"heads", spec.heads},
                     {"common_dim", spec.common_dim},
                     {"pooled_tokens", spec.pooled_tokens}};
}

void from_json(const nlohmann::json& j, ModelSpec& spec) {
  ModelSpec defaults;
  spec.kind = parse_model_kind(j.at("kind").get<std::string>());
  spec.input_dims = j.at("input_dims").get<std::vector<std::size_t>>();
  spec.num_classes = j.at("num_classes").get<std::size_t>();
  spec.dropout_rate = j.value("dropout_rate", defaults.dropout_rate);
  spec.heads = j.value("heads", defaults.heads);
  spec.common_dim = j.value("common_dim", defaults.common_dim);
  spec.pooled_tokens = j.value("pooled_tokens", defaults.pooled_tokens);
}

template <typename Scalar>
Network<Scalar> Network<Scalar>::build(const ModelSpec& spec, std::uint64_t seed) {
  spec.validate();
  Network net;
  net.spec_ = spec;
  nn::Rng rng(seed);
  auto& store = *net.params_;
  const bool attention = spec.kind == ModelKind::RENO;

  std::size_t head_input = 0;
  if (spec.kind == ModelKind::FCN) {
    head_input = spec.input_dims[0];
  } else {
    for (std::size_t v = 0; v < spec.input_dims.size(); ++v) {
      const std::string prefix = "branch" + std::to_string(v);
      Branch branch;
      branch.conv1.emplace(store, prefix + ".conv1", 1, kConvFilters1, rng);
      branch.conv2.emplace(store, prefix + ".conv2", kConvFilters1, kConvFilters2, rng);
      if (attention) branch.attention.emplace(store, prefix + ".attention", kConvFilters2, spec.heads, rng);
      if (spec.is_fusion()) {
        branch.projection.emplace(store, prefix + ".projection", kConvFilters2 * spec.pooled_tokens, spec.common_dim,
                                  rng);
      }
      net.branches_.push_back(std::move(branch));
    }
    head_input = spec.is_fusion() ? 2 * spec.common_dim : kConvFilters2 * spec.pooled_tokens;
  }
  if (attention) net.fusion_attention_.emplace(store, "fusion.attention", spec.common_dim, spec.heads, rng);
  net.head_.emplace(Head{nn::Dense<Scalar>(store, "head.hidden1", head_input, kHidden1, rng),
                         nn::Dense<Scalar>(store, "head.hidden2", kHidden1, kHidden2, rng),
                         nn::Dense<Scalar>(store, "head.output", kHidden2, spec.num_classes, rng)});
  return net;
}

template <typename Scalar>
Var Network<Scalar>::run_branch(Tape<Scalar>& tape, const Branch& branch, Var x) const {
  const std::size_t batch = tape.value(x).dim(0);
  const std::size_t dim = tape.value(x).dim(1);
  Var h = nn::reshape(tape, x, {batch, 1, dim});
  h = branch.conv1->forward(tape, h);
  h = branch.conv2->forward(tape, h);
  h = nn::adaptive_max_pool1d(tape, h, spec_.pooled_tokens);  // [batch, 64, tokens]
  if (branch.attention) {
    // Pooled positions become tokens, channels the embedding. The block is
    // residual: attention starts near uniform and would otherwise average
    // the positions away.
    h = nn::swap_last_axes(tape, h);
    h = nn::weighted_sum(tape, h, 1.0, branch.attention->forward(tape, h), 1.0);
  }
  h = nn::reshape(tape, h, {batch, kConvFilters2 * spec_.pooled_tokens});
  if (branch.projection) h = branch.projection->forward(tape, h);
  return h;
}

template <typename Scalar>
typename Network<Scalar>::Output Network<Scalar>::forward(Tape<Scalar>& tape, std::span<const Var> inputs,
                                                          bool training, nn::Rng& dropout_rng) const {
  if (!head_) throw ConfigError("forward() on an empty network");
  if (inputs.size() != spec_.view_count()) {
    throw DimensionError(to_string(spec_.kind) + " expects " + std::to_string(spec_.view_count()) +
                         " input view(s), got " + std::to_string(inputs.size()));
  }
  const std::size_t batch = tape.value(inputs[0]).dim(0);
  for (std::size_t v = 0; v < inputs.size(); ++v) {
    const auto& shape = tape.value(inputs[v]).shape();
    if (shape.size() != 2 || shape[0] != batch || shape[1] != spec_.input_dims[v]) {
      throw DimensionError("view " + std::to_string(v) + ": expected [" + std::to_string(batch) + ", " +
                           std::to_string(spec_.input_dims[v]) + "], got " + nn::to_string(shape));
    }
  }

  Output out;
  Var features;
  if (spec_.kind == ModelKind::FCN) {
    features = inputs[0];
  } else if (spec_.kind == ModelKind::CNN) {
    features = run_branch(tape, branches_[0], inputs[0]);
  } else {
    Var a = run_branch(tape, branches_[0], inputs[0]);
    Var b = run_branch(tape, branches_[1], inputs[1]);
    features = nn::concat_features(tape, a, b);
    if (fusion_attention_) {
      out.alignment_taps = std::make_pair(a, b);
      // One token per foundation model, residual as in the branches.
      Var tokens = nn::reshape(tape, features, {batch, 2, spec_.common_dim});
      Var attended = nn::weighted_sum(tape, tokens, 1.0, fusion_attention_->forward(tape, tokens), 1.0);
      features = nn::reshape(tape, attended, {batch, 2 * spec_.common_dim});
    }
  }

  Var h = nn::relu(tape, head_->hidden1.forward(tape, features));
  h = nn::dropout(tape, h, spec_.dropout_rate, dropout_rng, training);
  h = nn::relu(tape, head_->hidden2.forward(tape, h));
  h = nn::dropout(tape, h, spec_.dropout_rate, dropout_rng, training);
  out.probs = nn::softmax(tape, head_->output.forward(tape, h));
  return out;
}

namespace {

void require_kind(const ModelSpec& spec, ModelKind kind) {
  if (spec.kind != kind) {
    throw ConfigError("builder for " + to_string(kind) + " given a " + to_string(spec.kind) + " spec");
  }
}

}  // namespace

template <typename Scalar>
Network<Scalar> build_fcn(const ModelSpec& spec, std::uint64_t seed) {
  require_kind(spec, ModelKind::FCN);
  return Network<Scalar>::build(spec, seed);
}

template <typename Scalar>
Network<Scalar> build_cnn(const ModelSpec& spec, std::uint64_t seed) {
  require_kind(spec, ModelKind::CNN);
  return Network<Scalar>::build(spec, seed);
}

template <typename Scalar>
Network<Scalar> build_reno(const ModelSpec& spec, std::uint64_t seed) {
  require_kind(spec, ModelKind::RENO);
  return Network<Scalar>::build(spec, seed);
}

template <typename Scalar>
Network<Scalar> build_concat_fusion(const ModelSpec& spec, std::uint64_t seed) {
  require_kind(spec, ModelKind::CONCAT);
  return Network<Scalar>::build(spec, seed);
}

namespace {

constexpr std::array<char, 4> kCheckpointMagic{'N', 'V', 'M', 'D'};
constexpr std::uint32_t kCheckpointVersion = 1;

void write_u32(std::ostream& os, std::uint32_t v) {
  const std::array<unsigned char, 4> bytes{static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                           static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(bytes.data()), 4);
}

std::uint32_t read_u32(std::istream& is) {
  std::array<unsigned char, 4> bytes{};
  if (!is.read(reinterpret_cast<char*>(bytes.data()), 4)) throw FormatError("checkpoint truncated");
  return static_cast<std::uint32_t>(bytes[0]) | static_cast<std::uint32_t>(bytes[1]) << 8 |
         static_cast<std::uint32_t>(bytes[2]) << 16 | static_cast<std::uint32_t>(bytes[3]) << 24;
}

std::string read_string(std::istream& is, std::uint32_t length) {
  std::string s(length, '\0');
  if (!is.read(s.data(), length)) throw FormatError("checkpoint truncated");
  return s;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Network<float>& model) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write checkpoint " + path.string());
  os.write(kCheckpointMagic.data(), kCheckpointMagic.size());
  write_u32(os, kCheckpointVersion);
  const std::string spec = nlohmann::json(model.spec()).dump();
  write_u32(os, static_cast<std::uint32_t>(spec.size()));
  os.write(spec.data(), static_cast<std::streamsize>(spec.size()));
  write_u32(os, static_cast<std::uint32_t>(model.params().size()));
  for (const auto& p : model.params()) {
    write_u32(os, static_cast<std::uint32_t>(p.name.size()));
    os.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    write_u32(os, static_cast<std::uint32_t>(p.value.rank()));
    for (std::size_t extent : p.value.shape()) write_u32(os, static_cast<std::uint32_t>(extent));
    for (float v : p.value.data()) {
      std::uint32_t bits = 0;
      std::memcpy(&bits, &v, sizeof bits);
      write_u32(os, bits);
    }
  }
  if (!os) throw DataError("failed writing checkpoint " + path.string());
}

Network<float> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open checkpoint " + path.string());
  std::array<char, 4> magic{};
  if (!is.read(magic.data(), magic.size()) || magic != kCheckpointMagic) {
    throw FormatError(path.string() + " is not a model checkpoint");
  }
  if (const auto version = read_u32(is); version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  ModelSpec spec;
  try {
    spec = nlohmann::json::parse(read_string(is, read_u32(is))).get<ModelSpec>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint spec: ") + e.what());
  }
  auto model = Network<float>::build(spec, 0);
  const std::uint32_t count = read_u32(is);
  if (count != model.params().size()) {
    throw FormatError("checkpoint holds " + std::to_string(count) + " parameters, spec needs " +
                      std::to_string(model.params().size()));
  }
  for (auto& p : model.params()) {
    const std::string name = read_string(is, read_u32(is));
    nn::Shape shape(read_u32(is));
    for (auto& extent : shape) extent = read_u32(is);
    if (name != p.name || shape != p.value.shape()) {
      throw FormatError("checkpoint parameter " + name + " " + nn::to_string(shape) + " does not match " + p.name +
                        " " + nn::to_string(p.value.shape()));
    }
    for (auto& v : p.value.data()) {
      const std::uint32_t bits = read_u32(is);
      std::memcpy(&v, &bits, sizeof v);
    }
  }
  return model;
}

template class Network<float>;
template class Network<double>;

#define RENO_INSTANTIATE_BUILDERS(T)                                        \
  template Network<T> build_fcn<T>(const ModelSpec&, std::uint64_t);         \
  template Network<T> build_cnn<T>(const ModelSpec&, std::uint64_t);         \
  template Network<T> build_reno<T>(const ModelSpec&, std::uint64_t);        \
  template Network<T> build_concat_fusion<T>(const ModelSpec&, std::uint64_t);

RENO_INSTANTIATE_BUILDERS(float)
RENO_INSTANTIATE_BUILDERS(double)

}  // namespace reno::models
