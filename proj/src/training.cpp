// SPDX-License-Identifier: Apache-2.0
#include "reno/training.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <iomanip>
#include <limits>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "reno/errors.hpp"
#include "reno/nn/adam.hpp"
#include "reno/nn/rng.hpp"

namespace reno::eval {

using models::Network;
using nn::Tape;
using nn::Var;

// Stream ids for derive_seed within a fold.
namespace {
constexpr std::uint64_t kShuffleStream = 1;
constexpr std::uint64_t kDropoutStream = 2;
constexpr std::uint64_t kHoldoutStream = 3;
}  // namespace

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
  if (patience < 1) throw ConfigError("patience must be >= 1");
  loss.validate();
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"lr", c.lr},
                     {"batch_size", c.batch_size},
                     {"max_epochs", c.max_epochs},
                     {"patience", c.patience},
                     {"loss", {{"beta", c.loss.beta}, {"delta", c.loss.delta}, {"lambda", c.loss.lambda}}},
                     {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  c.lr = j.at("lr").get<double>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.max_epochs = j.at("max_epochs").get<std::size_t>();
  c.patience = j.at("patience").get<std::size_t>();
  const auto& loss = j.at("loss");
  c.loss.beta = loss.at("beta").get<double>();
  c.loss.delta = loss.at("delta").get<double>();
  c.loss.lambda = loss.at("lambda").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
}

EarlyStopping::EarlyStopping(std::size_t patience)
    : patience_(patience), best_loss_(std::numeric_limits<double>::infinity()) {
  if (patience == 0) throw ConfigError("patience must be >= 1");
}

bool EarlyStopping::observe(std::size_t epoch, double loss) {
  if (loss < best_loss_) {
    best_loss_ = loss;
    best_epoch_ = epoch;
    bad_epochs_ = 0;
    return true;
  }
  ++bad_epochs_;
  return false;
}

namespace {

std::vector<Var> input_nodes(Tape<float>& tape, std::span<const data::EmbeddingDataset> views,
                             std::span<const std::size_t> rows) {
  std::vector<Var> inputs;
  for (const auto& view : views) inputs.push_back(tape.constant(data::gather_rows<float>(view, rows)));
  return inputs;
}

void check_compatible(const models::ModelSpec& spec, std::span<const data::EmbeddingDataset> views) {
  if (views.size() != spec.view_count()) {
    throw ConfigError(models::to_string(spec.kind) + " needs " + std::to_string(spec.view_count()) +
                      " embedding view(s), got " + std::to_string(views.size()));
  }
  data::check_aligned(views);
  for (std::size_t v = 0; v < views.size(); ++v) {
    if (views[v].dim != spec.input_dims[v]) {
      throw ConfigError("view " + std::to_string(v) + " has dimension " + std::to_string(views[v].dim) +
                        ", model expects " + std::to_string(spec.input_dims[v]));
    }
  }
  if (views[0].num_classes() != spec.num_classes) {
    throw ConfigError("model has " + std::to_string(spec.num_classes) + " classes, label set has " +
                      std::to_string(views[0].num_classes()));
  }
}

}  // namespace

Predictions predict(const Network<float>& model, std::span<const data::EmbeddingDataset> views,
                    std::span<const std::size_t> indices, std::size_t batch_size) {
  Predictions out;
  nn::Rng unused(0);
  double ce_total = 0.0;
  for (std::size_t start = 0; start < indices.size(); start += batch_size) {
    const auto rows = indices.subspan(start, std::min(batch_size, indices.size() - start));
    Tape<float> tape;
    const auto inputs = input_nodes(tape, views, rows);
    const auto& probs = tape.value(model.forward(tape, inputs, /*training=*/false, unused).probs);
    const std::size_t classes = probs.dim(1);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const float* row = probs.ptr() + r * classes;
      const auto best = static_cast<int>(std::max_element(row, row + classes) - row);
      out.labels.push_back(best);
      const int truth = views[0].labels[rows[r]];
      ce_total -= std::log(static_cast<double>(row[truth]) + 1e-12);
    }
  }
  out.mean_cross_entropy = indices.empty() ? 0.0 : ce_total / static_cast<double>(indices.size());
  return out;
}

FoldResult train_fold(Network<float>& model, std::span<const data::EmbeddingDataset> views, const FoldSplit& split,
                      const TrainConfig& config, const TrainHooks& hooks) {
  config.validate();
  check_compatible(model.spec(), views);
  if (split.train.empty()) throw ConfigError("training split is empty");

  auto& params = model.params();
  const nn::Adam<float> adam({config.lr});
  nn::Rng shuffle_rng(nn::derive_seed(config.seed, kShuffleStream));
  nn::Rng dropout_rng(nn::derive_seed(config.seed, kDropoutStream));
  EarlyStopping stopper(config.patience);
  auto best_params = params.snapshot();

  FoldResult result;
  result.param_count = models::param_count(model);
  std::vector<std::size_t> order = split.train;
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    shuffle_rng.shuffle(std::span<std::size_t>(order));
    double loss_total = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size, ++batches) {
      const auto rows = std::span<const std::size_t>(order).subspan(
          start, std::min(config.batch_size, order.size() - start));
      const auto labels = data::gather_labels(views[0], rows);
      Tape<float> tape;
      const auto inputs = input_nodes(tape, views, rows);
      const auto out = model.forward(tape, inputs, /*training=*/true, dropout_rng);
      Var loss = losses::cross_entropy(tape, out.probs, labels);
      if (out.alignment_taps && hooks.alignment_loss) {
        Var rd = losses::renyi_divergence_loss(tape, out.alignment_taps->first, out.alignment_taps->second,
                                               config.loss);
        loss = losses::joint_loss(tape, loss, rd, config.loss.lambda);
      }
      const float value = tape.value(loss)[0];
      if (!std::isfinite(value)) {
        throw NumericError("training diverged: non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(batches));
      }
      loss_total += value;
      params.zero_grad();
      tape.backward(loss);
      try {
        adam.step(params);
      } catch (const NumericError& e) {
        throw NumericError("training diverged at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(batches) + ": " + e.what());
      }
    }

    EpochStats stats{epoch, loss_total / static_cast<double>(batches), 0.0};
    // An empty validation split falls back to the training rows.
    const auto& monitored_rows = split.validation.empty() ? split.train : split.validation;
    stats.validation_loss = predict(model, views, monitored_rows, config.batch_size).mean_cross_entropy;
    const double monitored = hooks.monitor ? hooks.monitor(epoch, stats.validation_loss) : stats.validation_loss;
    if (stopper.observe(epoch, monitored)) best_params = params.snapshot();
    result.history.push_back(stats);
    result.epochs_run = epoch;
    spdlog::debug("epoch {:>2}: train loss {:.5f}, validation CE {:.5f}", epoch, stats.train_loss,
                  stats.validation_loss);
    if (hooks.on_epoch) hooks.on_epoch(stats, params);
    if (stopper.should_stop()) break;
  }
  params.restore(best_params);
  result.best_epoch = stopper.best_epoch();

  const auto predicted = predict(model, views, split.test, config.batch_size);
  const auto truth = data::gather_labels(views[0], split.test);
  auto metrics = compute_metrics(truth, predicted.labels, model.spec().num_classes);
  result.accuracy = metrics.accuracy;
  result.macro_f1 = metrics.macro_f1;
  result.confusion = std::move(metrics.confusion);
  return result;
}

void to_json(nlohmann::json& j, const ExperimentReport& r) {
  nlohmann::json folds = nlohmann::json::array();
  for (const auto& f : r.folds) {
    folds.push_back({{"fold", f.fold_index},
                     {"accuracy", f.accuracy},
                     {"macro_f1", f.macro_f1},
                     {"epochs_run", f.epochs_run},
                     {"param_count", f.param_count},
                     {"confusion", f.confusion}});
  }
  j = nlohmann::json{{"model", r.model},
                     {"train", r.train},
                     {"folds", std::move(folds)},
                     {"mean_accuracy", r.mean_accuracy},
                     {"std_accuracy", r.std_accuracy},
                     {"mean_macro_f1", r.mean_macro_f1},
                     {"std_macro_f1", r.std_macro_f1}};
}

void from_json(const nlohmann::json& j, ExperimentReport& r) {
  r.model = j.at("model").get<models::ModelSpec>();
  r.train = j.at("train").get<TrainConfig>();
  r.folds.clear();
  for (const auto& f : j.at("folds")) {
    FoldResult fold;
    fold.fold_index = f.at("fold").get<std::size_t>();
    fold.accuracy = f.at("accuracy").get<double>();
    fold.macro_f1 = f.at("macro_f1").get<double>();
    fold.epochs_run = f.at("epochs_run").get<std::size_t>();
    fold.param_count = f.at("param_count").get<std::size_t>();
    fold.confusion = f.at("confusion").get<ConfusionMatrix>();
    r.folds.push_back(std::move(fold));
  }
  r.mean_accuracy = j.at("mean_accuracy").get<double>();
  r.std_accuracy = j.at("std_accuracy").get<double>();
  r.mean_macro_f1 = j.at("mean_macro_f1").get<double>();
  r.std_macro_f1 = j.at("std_macro_f1").get<double>();
}

void aggregate(ExperimentReport& report) {
  auto mean_std = [&](auto field) {
    const double n = static_cast<double>(report.folds.size());
    if (n == 0) return std::pair{0.0, 0.0};
    double sum = 0.0;
    for (const auto& f : report.folds) sum += f.*field;
    const double mean = sum / n;
    double var = 0.0;
    for (const auto& f : report.folds) var += (f.*field - mean) * (f.*field - mean);
    return std::pair{mean, std::sqrt(var / n)};
  };
  std::tie(report.mean_accuracy, report.std_accuracy) = mean_std(&FoldResult::accuracy);
  std::tie(report.mean_macro_f1, report.std_macro_f1) = mean_std(&FoldResult::macro_f1);
}

data::FoldPlan experiment_fold_plan(std::span<const data::EmbeddingDataset> views, const TrainConfig& config,
                                    std::size_t k) {
  return data::stratified_kfold(views[0], k, config.seed);
}

FoldSplit make_fold_split(const data::FoldPlan& plan, std::span<const int> labels, std::size_t fold,
                          std::uint64_t seed, double validation_fraction) {
  FoldSplit split;
  split.test = plan.test_indices(fold);
  const auto pool = plan.train_indices(fold);
  std::tie(split.train, split.validation) =
      data::stratified_holdout(pool, labels, validation_fraction, nn::derive_seed(seed, kHoldoutStream));
  return split;
}

namespace {

// Re-raises the active exception with the fold index prefixed, keeping its type.
[[noreturn]] void rethrow_for_fold(std::exception_ptr error, std::size_t fold) {
  const std::string prefix = "fold " + std::to_string(fold) + ": ";
  try {
    std::rethrow_exception(error);
  } catch (const InputTooShortError& e) {
    throw InputTooShortError(prefix + e.what());
  } catch (const LabelError& e) {
    throw LabelError(prefix + e.what());
  } catch (const DimensionError& e) {
    throw DimensionError(prefix + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError(prefix + e.what());
  } catch (const NumericError& e) {
    throw NumericError(prefix + e.what());
  } catch (const DataError& e) {
    throw DataError(prefix + e.what());
  } catch (const std::exception& e) {
    throw Error(prefix + e.what());
  }
}

}  // namespace

ExperimentReport run_experiment(const models::ModelSpec& spec, std::span<const data::EmbeddingDataset> views,
                                const TrainConfig& config, const ExperimentOptions& options) {
  spec.validate();
  config.validate();
  check_compatible(spec, views);
  const auto plan = experiment_fold_plan(views, config, options.k);

  ExperimentReport report{spec, config, std::vector<FoldResult>(options.k)};
  std::vector<std::exception_ptr> errors(options.k);
  auto run_fold = [&](std::size_t fold) {
    try {
      TrainConfig fold_config = config;
      fold_config.seed = config.seed + fold;
      const auto split = make_fold_split(plan, views[0].labels, fold, fold_config.seed, options.validation_fraction);
      auto model = Network<float>::build(spec, fold_config.seed);
      spdlog::info("fold {}/{}: {} train, {} validation, {} test, {} parameters", fold + 1, options.k,
                   split.train.size(), split.validation.size(), split.test.size(), models::param_count(model));
      auto result = train_fold(model, views, split, fold_config, options.hooks);
      result.fold_index = fold;
      if (options.on_fold_model) options.on_fold_model(fold, model);
      spdlog::info("fold {}/{}: accuracy {:.4f}, macro-F1 {:.4f}, {} epochs", fold + 1, options.k, result.accuracy,
                   result.macro_f1, result.epochs_run);
      report.folds[fold] = std::move(result);
    } catch (...) {
      errors[fold] = std::current_exception();
    }
  };

  const std::size_t workers = std::clamp<std::size_t>(options.parallel_folds, 1, options.k);
  if (workers == 1) {
    for (std::size_t fold = 0; fold < options.k; ++fold) run_fold(fold);
  } else {
    std::mutex mutex;
    std::size_t next = 0;
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (;;) {
          std::size_t fold = 0;
          {
            std::lock_guard lock(mutex);
            if (next == options.k) return;
            fold = next++;
          }
          run_fold(fold);
        }
      });
    }
  }
  for (std::size_t fold = 0; fold < options.k; ++fold) {
    if (errors[fold]) rethrow_for_fold(errors[fold], fold);
  }
  aggregate(report);
  return report;
}

std::string render_report_table(const ExperimentReport& report) {
  std::ostringstream os;
  os << "model: " << models::to_string(report.model.kind) << "  dims:";
  for (std::size_t d : report.model.input_dims) os << ' ' << d;
  os << "  classes: " << report.model.num_classes;
  if (!report.folds.empty()) os << "  parameters: " << report.folds.front().param_count;
  os << '\n';
  os << std::left << std::setw(8) << "fold" << std::right << std::setw(10) << "A" << std::setw(10) << "F1"
     << std::setw(10) << "epochs" << '\n';
  os << std::fixed << std::setprecision(2);
  for (const auto& f : report.folds) {
    os << std::left << std::setw(8) << f.fold_index << std::right << std::setw(10) << 100.0 * f.accuracy
       << std::setw(10) << 100.0 * f.macro_f1 << std::setw(10) << f.epochs_run << '\n';
  }
  os << std::left << std::setw(8) << "mean" << std::right << std::setw(10) << 100.0 * report.mean_accuracy
     << std::setw(10) << 100.0 * report.mean_macro_f1 << '\n';
  os << std::left << std::setw(8) << "std" << std::right << std::setw(10) << 100.0 * report.std_accuracy
     << std::setw(10) << 100.0 * report.std_macro_f1 << '\n';
  return os.str();
}

}  // namespace reno::eval
