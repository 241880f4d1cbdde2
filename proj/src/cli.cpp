// SPDX-License-Identifier: Apache-2.0
#include "reno/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "reno/data.hpp"
#include "reno/errors.hpp"
#include "reno/gradcheck_suite.hpp"
#include "reno/metrics.hpp"
#include "reno/models.hpp"
#include "reno/training.hpp"

namespace reno::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class UsageError : public Error {
 public:
  using Error::Error;
};

void configure_logging() {
  auto logger = spdlog::get("nver");
  if (!logger) {
    logger = spdlog::stderr_color_mt("nver");
    logger->set_pattern("[%l] %v");
  }
  spdlog::set_default_logger(logger);
  const char* env = std::getenv("NVER_LOG_LEVEL");
  const std::string level = env ? env : "info";
  if (level == "error") {
    spdlog::set_level(spdlog::level::err);
  } else if (level == "debug") {
    spdlog::set_level(spdlog::level::debug);
  } else {
    if (level != "info") spdlog::warn("unknown NVER_LOG_LEVEL '{}', using info", level);
    spdlog::set_level(spdlog::level::info);
  }
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write " + path.string());
  os << text;
}

std::vector<data::EmbeddingDataset> load_views(const std::string& embeddings, const std::string& manifest,
                                               const std::string& labels) {
  const auto paths = split_list(embeddings);
  if (paths.empty() || paths.size() > 2) {
    throw UsageError("--embeddings takes one or two comma-separated paths, got " + std::to_string(paths.size()));
  }
  std::optional<std::vector<std::string>> vocabulary;
  if (!labels.empty()) vocabulary = data::read_label_vocabulary(labels);
  std::vector<data::EmbeddingDataset> views;
  for (const auto& p : paths) views.push_back(data::load_dataset(p, manifest, vocabulary));
  return views;
}

struct TrainArgs {
  std::string model = "reno";
  std::string embeddings;
  std::string manifest;
  std::string labels;
  std::string out;
  eval::TrainConfig config;
  models::ModelSpec spec;
  std::size_t folds = 5;
  std::size_t parallel_folds = 1;
  bool save_models = false;
};

int run_train(const TrainArgs& args) {
  auto views = load_views(args.embeddings, args.manifest, args.labels);
  models::ModelSpec spec = args.spec;
  spec.kind = models::parse_model_kind(args.model);
  if (views.size() != spec.view_count()) {
    throw UsageError("--model " + args.model + " expects " + std::to_string(spec.view_count()) +
                     " embedding file(s) but " + std::to_string(views.size()) + " were given");
  }
  spec.input_dims.clear();
  for (const auto& v : views) spec.input_dims.push_back(v.dim);
  spec.num_classes = views[0].num_classes();

  fs::path report_path = args.out;
  if (report_path.extension() != ".json") report_path /= "report.json";
  const fs::path root = report_path.has_parent_path() ? report_path.parent_path() : fs::path(".");

  spdlog::info("resolved configuration: {}",
               json{{"model", spec}, {"train", args.config}, {"k", args.folds},
                    {"parallel_folds", args.parallel_folds}, {"embeddings", args.embeddings},
                    {"manifest", args.manifest}, {"labels", args.labels}, {"out", report_path.string()}}
                   .dump());

  eval::ExperimentOptions options;
  options.k = args.folds;
  options.parallel_folds = args.parallel_folds;
  if (args.save_models) {
    fs::create_directories(root / "models");
    options.on_fold_model = [&root](std::size_t fold, const models::Network<float>& model) {
      models::save_checkpoint(root / "models" / ("fold" + std::to_string(fold) + ".nvmd"), model);
    };
  }
  const auto report = eval::run_experiment(spec, views, args.config, options);

  write_text(report_path, json(report).dump(2) + "\n");
  write_text(root / "fold_plan.json", json(eval::experiment_fold_plan(views, args.config, args.folds)).dump() + "\n");
  std::cout << eval::render_report_table(report);
  spdlog::info("wrote {}", report_path.string());
  return kSuccess;
}

int run_evaluate(const std::string& checkpoint, const std::string& embeddings, const std::string& manifest,
                 const std::string& labels, const std::string& out, std::size_t batch) {
  const auto model = models::load_checkpoint(checkpoint);
  auto views = load_views(embeddings, manifest, labels);
  if (views.size() != model.spec().view_count()) {
    throw UsageError("checkpoint model " + models::to_string(model.spec().kind) + " expects " +
                     std::to_string(model.spec().view_count()) + " embedding file(s), got " +
                     std::to_string(views.size()));
  }
  data::check_aligned(views);
  for (std::size_t v = 0; v < views.size(); ++v) {
    if (views[v].dim != model.spec().input_dims[v]) {
      throw UsageError("embedding file " + std::to_string(v) + " has dimension " + std::to_string(views[v].dim) +
                       ", model expects " + std::to_string(model.spec().input_dims[v]));
    }
  }
  if (views[0].num_classes() != model.spec().num_classes) {
    throw UsageError("label set has " + std::to_string(views[0].num_classes()) + " classes, model has " +
                     std::to_string(model.spec().num_classes));
  }
  std::vector<std::size_t> rows(views[0].size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  const auto predicted = eval::predict(model, views, rows, batch);
  const auto metrics = eval::compute_metrics(views[0].labels, predicted.labels, model.spec().num_classes);

  const fs::path root = out;
  const json result{{"checkpoint", checkpoint}, {"model", model.spec()},       {"samples", rows.size()},
                    {"accuracy", metrics.accuracy}, {"macro_f1", metrics.macro_f1}, {"confusion", metrics.confusion}};
  write_text(root / "evaluation.json", result.dump(2) + "\n");
  write_text(root / "confusion.csv", eval::confusion_csv(metrics.confusion, views[0].label_names));
  std::cout << std::fixed << std::setprecision(2) << "A " << 100.0 * metrics.accuracy << "  F1 "
            << 100.0 * metrics.macro_f1 << "  (" << rows.size() << " samples)\n";
  return kSuccess;
}

int run_gradcheck(std::uint64_t seed, std::size_t seeds, const std::string& out) {
  bool passed = true;
  json results = json::array();
  std::cout << std::left << std::setw(30) << "case" << std::setw(8) << "seed" << std::setw(30) << "parameter"
            << std::right << std::setw(14) << "max rel err" << std::setw(9) << "checked" << std::setw(7) << "ok" << '\n';
  for (std::uint64_t s = seed; s < seed + seeds; ++s) {
    for (const auto& c : run_gradcheck_suite(s)) {
      for (const auto& p : c.report.parameters) {
        std::cout << std::left << std::setw(30) << c.name << std::setw(8) << s << std::setw(30) << p.name
                  << std::right << std::setw(14) << std::scientific << std::setprecision(3) << p.max_relative_error
                  << std::setw(9) << p.checked << std::setw(7)
                  << (p.passed ? "yes" : "NO") << '\n';
        results.push_back({{"case", c.name}, {"seed", s}, {"parameter", p.name}, {"tolerance", c.tolerance},
                           {"max_relative_error", p.max_relative_error}, {"checked", p.checked}, {"passed", p.passed}});
      }
      passed = passed && c.report.passed;
    }
  }
  if (!out.empty()) write_text(fs::path(out) / "gradcheck.json", results.dump(2) + "\n");
  std::cout << (passed ? "gradient check passed\n" : "gradient check FAILED\n");
  return passed ? kSuccess : kNumericFailure;
}

int run_synth(std::size_t classes, std::size_t per_class, const std::string& dims_text, double separation,
              std::uint64_t seed, const std::string& out) {
  std::vector<std::size_t> dims;
  for (const auto& d : split_list(dims_text)) {
    try {
      dims.push_back(std::stoul(d));
    } catch (const std::exception&) {
      throw UsageError("--dims expects comma-separated positive integers, got '" + dims_text + "'");
    }
  }
  if (dims.empty() || dims.size() > 2) throw UsageError("--dims takes one or two dimensions");
  const auto views = data::synth_generate(classes, per_class, dims, separation, seed);
  const fs::path root = out;
  fs::create_directories(root);
  data::save_dataset(views[0], root / "view0.nveb", root / "manifest.csv");
  for (std::size_t v = 1; v < views.size(); ++v) {
    const auto& ds = views[v];
    data::write_embeddings(root / ("view" + std::to_string(v) + ".nveb"), {ds.dim, ds.size(), ds.vectors});
  }
  data::write_label_vocabulary(root / "labels.txt", views[0].label_names);
  spdlog::info("wrote {} view(s) of {} samples to {}", views.size(), views[0].size(), root.string());
  return kSuccess;
}

int run_report(const std::string& report_path, const std::string& labels, const std::string& out) {
  std::ifstream is(report_path);
  if (!is) throw DataError("cannot open " + report_path);
  eval::ExperimentReport report;
  try {
    report = json::parse(is).get<eval::ExperimentReport>();
  } catch (const json::exception& e) {
    throw FormatError(report_path + ": " + e.what());
  }
  std::vector<std::string> names;
  if (!labels.empty()) names = data::read_label_vocabulary(labels);
  const std::string table = eval::render_report_table(report);
  std::cout << table;
  if (!out.empty()) {
    const fs::path root = out;
    write_text(root / "table.txt", table);
    eval::ConfusionMatrix total;
    for (const auto& f : report.folds) {
      write_text(root / ("confusion_fold" + std::to_string(f.fold_index) + ".csv"), eval::confusion_csv(f.confusion, names));
      if (total.empty()) total.assign(f.confusion.size(), std::vector<long long>(f.confusion.size(), 0));
      for (std::size_t r = 0; r < total.size(); ++r)
        for (std::size_t c = 0; c < total.size(); ++c) total[r][c] += f.confusion.at(r).at(c);
    }
    write_text(root / "confusion_total.csv", eval::confusion_csv(total, names));
  }
  return kSuccess;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  configure_logging();
  CLI::App app{"Non-verbal vocal emotion recognition over foundation-model embeddings", "nver"};
  app.require_subcommand(1);

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "k-fold cross-validated training; writes a report JSON");
  train_cmd->add_option("--model", train.model, "fcn, cnn, concat or reno")
      ->check(CLI::IsMember({"fcn", "cnn", "concat", "reno"}, CLI::ignore_case))
      ->capture_default_str();
  train_cmd->add_option("--embeddings", train.embeddings, "one or two comma-separated .nveb files")->required();
  train_cmd->add_option("--manifest", train.manifest, "manifest CSV")->required();
  train_cmd->add_option("--labels", train.labels, "label vocabulary file");
  train_cmd->add_option("--seed", train.config.seed)->capture_default_str();
  train_cmd->add_option("--out", train.out, "report path (.json) or output directory")->required();
  train_cmd->add_option("--beta", train.config.loss.beta)->capture_default_str();
  train_cmd->add_option("--delta", train.config.loss.delta)->capture_default_str();
  train_cmd->add_option("--lambda", train.config.loss.lambda)->capture_default_str();
  train_cmd->add_option("--lr", train.config.lr)->capture_default_str();
  train_cmd->add_option("--batch", train.config.batch_size)->capture_default_str();
  train_cmd->add_option("--epochs", train.config.max_epochs)->capture_default_str();
  train_cmd->add_option("--patience", train.config.patience)->capture_default_str();
  train_cmd->add_option("--heads", train.spec.heads)->capture_default_str();
  train_cmd->add_option("--dropout", train.spec.dropout_rate)->capture_default_str();
  train_cmd->add_option("--common-dim", train.spec.common_dim)->capture_default_str();
  train_cmd->add_option("--pooled-tokens", train.spec.pooled_tokens)->capture_default_str();
  train_cmd->add_option("--folds", train.folds)->capture_default_str();
  train_cmd->add_option("--parallel-folds", train.parallel_folds)->capture_default_str();
  train_cmd->add_flag("--save-models", train.save_models, "write one checkpoint per fold under <out>/models");

  std::string checkpoint, eval_embeddings, eval_manifest, eval_labels, eval_out;
  std::size_t eval_batch = 32;
  auto* eval_cmd = app.add_subcommand("evaluate", "score a saved checkpoint on a dataset");
  eval_cmd->add_option("--checkpoint", checkpoint)->required();
  eval_cmd->add_option("--embeddings", eval_embeddings)->required();
  eval_cmd->add_option("--manifest", eval_manifest)->required();
  eval_cmd->add_option("--labels", eval_labels);
  eval_cmd->add_option("--out", eval_out)->required();
  eval_cmd->add_option("--batch", eval_batch)->capture_default_str();

  std::uint64_t gc_seed = 1;
  std::size_t gc_seeds = 1;
  std::string gc_out;
  auto* gc_cmd = app.add_subcommand("gradcheck", "finite-difference check of every layer, loss and RENO");
  gc_cmd->add_option("--seed", gc_seed)->capture_default_str();
  gc_cmd->add_option("--seeds", gc_seeds, "number of consecutive seeds")->capture_default_str();
  gc_cmd->add_option("--out", gc_out, "directory for gradcheck.json");

  std::size_t classes = 6, per_class = 50;
  std::string dims = "64,96", synth_out;
  double separation = 8.0;
  std::uint64_t synth_seed = 0;
  auto* synth_cmd = app.add_subcommand("synth-data", "write synthetic Gaussian embedding views");
  synth_cmd->add_option("--classes", classes)->capture_default_str();
  synth_cmd->add_option("--per-class", per_class)->capture_default_str();
  synth_cmd->add_option("--dims", dims)->capture_default_str();
  synth_cmd->add_option("--separation", separation)->capture_default_str();
  synth_cmd->add_option("--seed", synth_seed)->capture_default_str();
  synth_cmd->add_option("--out", synth_out)->required();

  std::string report_in, report_labels, report_out;
  auto* report_cmd = app.add_subcommand("report", "render a report JSON as a table and confusion CSVs");
  report_cmd->add_option("--report", report_in)->required();
  report_cmd->add_option("--labels", report_labels);
  report_cmd->add_option("--out", report_out);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kSuccess : kUsageError;
  }

  try {
    if (*train_cmd) return run_train(train);
    if (*eval_cmd) return run_evaluate(checkpoint, eval_embeddings, eval_manifest, eval_labels, eval_out, eval_batch);
    if (*gc_cmd) return run_gradcheck(gc_seed, gc_seeds, gc_out);
    if (*synth_cmd) return run_synth(classes, per_class, dims, separation, synth_seed, synth_out);
    if (*report_cmd) return run_report(report_in, report_labels, report_out);
  } catch (const UsageError& e) {
    spdlog::error("{}", e.what());
    std::cerr << app.help() << '\n';
    return kUsageError;
  } catch (const DataError& e) {
    spdlog::error("data error: {}", e.what());
    return kDataError;
  } catch (const LabelError& e) {
    spdlog::error("data error: {}", e.what());
    return kDataError;
  } catch (const NumericError& e) {
    spdlog::error("numeric failure: {}", e.what());
    return kNumericFailure;
  } catch (const InputTooShortError& e) {
    spdlog::error("{}", e.what());
    return kUsageError;
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return kUsageError;
  } catch (const fs::filesystem_error& e) {
    spdlog::error("data error: {}", e.what());
    return kDataError;
  }
  return kUsageError;
}

}  // namespace reno::cli
