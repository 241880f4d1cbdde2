// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "reno/nn/tensor.hpp"

namespace reno::data {

/// Pooled foundation-model embeddings with a parallel manifest.
struct EmbeddingDataset {
  std::string fm_name;
  std::size_t dim = 0;
  std::vector<float> vectors;  // [count, dim] row-major
  std::vector<std::string> sample_ids;
  std::vector<int> labels;
  std::vector<std::string> label_names;
  std::vector<std::string> speakers;  // empty when unknown
  std::string dataset_name;

  std::size_t size() const { return labels.size(); }
  std::size_t num_classes() const { return label_names.size(); }
  std::span<const float> row(std::size_t i) const { return {vectors.data() + i * dim, dim}; }

  /// Checks the parallel-list and label-range invariants.
  void validate() const;
};

/// Raw contents of an embedding file.
struct EmbeddingMatrix {
  std::size_t dim = 0;
  std::size_t count = 0;
  std::vector<float> values;
};

/// Little-endian "NVEB" | u32 version=1 | u32 dim | u32 count | float32[count·dim].
void write_embeddings(const std::filesystem::path& path, const EmbeddingMatrix& matrix);
EmbeddingMatrix read_embeddings(const std::filesystem::path& path);

struct ManifestRow {
  std::string sample_id;
  std::string label;
  std::string speaker;
  std::string dataset;
};

/// CSV with the exact header "sample_id,label,speaker,dataset".
void write_manifest(const std::filesystem::path& path, std::span<const ManifestRow> rows);
std::vector<ManifestRow> read_manifest(const std::filesystem::path& path);

/// One label name per line; the line index is the class id.
void write_label_vocabulary(const std::filesystem::path& path, std::span<const std::string> names);
std::vector<std::string> read_label_vocabulary(const std::filesystem::path& path);

/// Loads embeddings and manifest, aligned by row. Without a vocabulary the
/// sorted distinct manifest labels are used.
EmbeddingDataset load_dataset(const std::filesystem::path& embeddings_path, const std::filesystem::path& manifest_path,
                              const std::optional<std::vector<std::string>>& vocabulary = std::nullopt);

/// Writes the embedding file and the manifest for a dataset.
void save_dataset(const EmbeddingDataset& dataset, const std::filesystem::path& embeddings_path,
                  const std::filesystem::path& manifest_path);

/// Per-sample test-fold assignment.
struct FoldPlan {
  std::size_t k = 5;
  std::uint64_t seed = 0;
  std::vector<std::size_t> assignments;

  std::vector<std::size_t> test_indices(std::size_t fold) const;
  std::vector<std::size_t> train_indices(std::size_t fold) const;
};

void to_json(nlohmann::json& j, const FoldPlan& plan);
void from_json(const nlohmann::json& j, FoldPlan& plan);

/// Seeded shuffle within each class, then round-robin over folds with the
/// starting fold carried across classes. Every class must have >= k samples.
FoldPlan stratified_kfold(std::span<const int> labels, std::size_t num_classes, std::size_t k, std::uint64_t seed);
FoldPlan stratified_kfold(const EmbeddingDataset& dataset, std::size_t k, std::uint64_t seed);

/// Splits indices into (train, validation) with round(fraction·n_c) held out
/// per class, at least one for classes with two or more members.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_holdout(std::span<const std::size_t> indices,
                                                                               std::span<const int> labels,
                                                                               double fraction, std::uint64_t seed);

/// Gaussian class clusters: class c of view v is centered at
/// separation·u_{c,v} with u_{c,v} a seeded random unit vector, unit
/// variance. All views share sample ids, labels and order.
std::vector<EmbeddingDataset> synth_generate(std::size_t num_classes, std::size_t per_class,
                                             std::span<const std::size_t> dims, double separation, std::uint64_t seed);

/// Rows `indices` of the dataset as a [indices.size(), dim] tensor.
template <typename Scalar>
nn::Tensor<Scalar> gather_rows(const EmbeddingDataset& dataset, std::span<const std::size_t> indices);

std::vector<int> gather_labels(const EmbeddingDataset& dataset, std::span<const std::size_t> indices);

/// Throws AlignmentError unless all views agree on ids and labels.
void check_aligned(std::span<const EmbeddingDataset> views);

}  // namespace reno::data
