// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace reno::eval {

/// Row = true class, column = predicted class.
using ConfusionMatrix = std::vector<std::vector<long long>>;

struct Metrics {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  std::vector<double> per_class_f1;
  ConfusionMatrix confusion;
};

/// Accuracy, macro-F1 (unweighted mean of per-class F1; a class with no true
/// positives scores 0) and the confusion matrix.
Metrics compute_metrics(std::span<const int> truth, std::span<const int> predicted, std::size_t num_classes);

/// CSV with predicted label names as the header row and true label names in
/// the first column.
std::string confusion_csv(const ConfusionMatrix& confusion, std::span<const std::string> label_names);

}  // namespace reno::eval
