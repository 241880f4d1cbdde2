// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "reno/data.hpp"
#include "reno/losses.hpp"
#include "reno/metrics.hpp"
#include "reno/models.hpp"

namespace reno::eval {

struct TrainConfig {
  double lr = 1e-3;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 20;
  std::size_t patience = 5;
  losses::LossConfig loss;
  std::uint64_t seed = 0;

  void validate() const;
};

void to_json(nlohmann::json& j, const TrainConfig& config);
void from_json(const nlohmann::json& j, TrainConfig& config);

/// Tracks the best validation loss and decides when to stop: training halts
/// once `patience` consecutive epochs fail to improve on the best.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience);

  /// Records the loss of a finished epoch. Returns true if it is a new best.
  bool observe(std::size_t epoch, double loss);
  bool should_stop() const { return bad_epochs_ >= patience_; }

  std::size_t best_epoch() const { return best_epoch_; }
  double best_loss() const { return best_loss_; }

 private:
  std::size_t patience_;
  std::size_t bad_epochs_ = 0;
  std::size_t best_epoch_ = 0;
  double best_loss_;
};

struct EpochStats {
  std::size_t epoch = 0;
  double train_loss = 0.0;       // mean objective over mini-batches
  double validation_loss = 0.0;  // cross-entropy on the validation split
};

struct FoldResult {
  std::size_t fold_index = 0;
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  ConfusionMatrix confusion;
  std::size_t epochs_run = 0;
  std::size_t param_count = 0;
  // Not serialized.
  std::size_t best_epoch = 0;
  std::vector<EpochStats> history;
};

/// Sample indices of one fold. All views share them.
struct FoldSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
};

/// Observation points for callers and tests.
struct TrainHooks {
  /// Adds the alignment term for models with alignment taps. When false the
  /// objective is pure cross-entropy.
  bool alignment_loss = true;
  /// Called after each epoch with the parameters reached at that epoch.
  std::function<void(const EpochStats&, const nn::ParameterStore<float>&)> on_epoch;
  /// Maps the measured validation loss to the value early stopping sees.
  std::function<double(std::size_t epoch, double measured)> monitor;
};

/// Mini-batch Adam training with seeded per-epoch shuffling, early stopping
/// on validation cross-entropy (best weights restored), then scoring on the
/// test split. For models with alignment taps the objective is
/// lambda·CE + (1 - lambda)·RD.
FoldResult train_fold(models::Network<float>& model, std::span<const data::EmbeddingDataset> views,
                      const FoldSplit& split, const TrainConfig& config, const TrainHooks& hooks = {});

struct Predictions {
  std::vector<int> labels;
  double mean_cross_entropy = 0.0;
};

/// Evaluation-mode forward pass (dropout off) over the given rows.
Predictions predict(const models::Network<float>& model, std::span<const data::EmbeddingDataset> views,
                    std::span<const std::size_t> indices, std::size_t batch_size);

struct ExperimentReport {
  models::ModelSpec model;
  TrainConfig train;
  std::vector<FoldResult> folds;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;
  double mean_macro_f1 = 0.0;
  double std_macro_f1 = 0.0;
};

void to_json(nlohmann::json& j, const ExperimentReport& report);
void from_json(const nlohmann::json& j, ExperimentReport& report);

/// Fills the mean/std fields from the folds (population std).
void aggregate(ExperimentReport& report);

struct ExperimentOptions {
  std::size_t k = 5;
  std::size_t parallel_folds = 1;
  double validation_fraction = 0.1;
  TrainHooks hooks;
  /// Receives each fold's trained model (best weights restored). May be
  /// called from worker threads when folds run in parallel.
  std::function<void(std::size_t fold, const models::Network<float>&)> on_fold_model;
};

/// k-fold cross-validation with a fresh model per fold seeded with
/// config.seed + fold. Views must be aligned; spec dims and class count
/// must match the data.
ExperimentReport run_experiment(const models::ModelSpec& spec, std::span<const data::EmbeddingDataset> views,
                                const TrainConfig& config, const ExperimentOptions& options = {});

/// The fold plan run_experiment uses for these inputs.
data::FoldPlan experiment_fold_plan(std::span<const data::EmbeddingDataset> views, const TrainConfig& config,
                                    std::size_t k);

/// Train/validation/test indices of one fold.
FoldSplit make_fold_split(const data::FoldPlan& plan, std::span<const int> labels, std::size_t fold,
                          std::uint64_t seed, double validation_fraction);

/// Aligned text table: one row per fold plus mean and std, accuracy and
/// macro-F1 in percent.
std::string render_report_table(const ExperimentReport& report);

}  // namespace reno::eval
