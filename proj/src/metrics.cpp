// SPDX-License-Identifier: Apache-2.0
#include "reno/metrics.hpp"

#include <sstream>

#include "reno/errors.hpp"

namespace reno::eval {

Metrics compute_metrics(std::span<const int> truth, std::span<const int> predicted, std::size_t num_classes) {
  if (truth.size() != predicted.size()) {
    throw ConfigError("compute_metrics: " + std::to_string(truth.size()) + " true labels vs " +
                      std::to_string(predicted.size()) + " predictions");
  }
  Metrics m;
  m.confusion.assign(num_classes, std::vector<long long>(num_classes, 0));
  auto check = [num_classes](int label, std::size_t i) {
    if (label < 0 || static_cast<std::size_t>(label) >= num_classes) {
      throw LabelError("compute_metrics: label " + std::to_string(label) + " at position " + std::to_string(i) +
                       " outside [0, " + std::to_string(num_classes) + ")");
    }
    return static_cast<std::size_t>(label);
  };
  long long correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const std::size_t t = check(truth[i], i);
    const std::size_t p = check(predicted[i], i);
    ++m.confusion[t][p];
    if (t == p) ++correct;
  }
  m.accuracy = truth.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(truth.size());

  double f1_total = 0.0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    long long predicted_c = 0, actual_c = 0;
    for (std::size_t r = 0; r < num_classes; ++r) {
      predicted_c += m.confusion[r][c];
      actual_c += m.confusion[c][r];
    }
    const long long tp = m.confusion[c][c];
    double f1 = 0.0;
    if (tp > 0) {
      const double precision = static_cast<double>(tp) / static_cast<double>(predicted_c);
      const double recall = static_cast<double>(tp) / static_cast<double>(actual_c);
      f1 = 2.0 * precision * recall / (precision + recall);
    }
    m.per_class_f1.push_back(f1);
    f1_total += f1;
  }
  m.macro_f1 = num_classes ? f1_total / static_cast<double>(num_classes) : 0.0;
  return m;
}

std::string confusion_csv(const ConfusionMatrix& confusion, std::span<const std::string> label_names) {
  auto name = [&](std::size_t i) { return i < label_names.size() ? label_names[i] : std::to_string(i); };
  std::ostringstream os;
  os << "true\\predicted";
  for (std::size_t c = 0; c < confusion.size(); ++c) os << ',' << name(c);
  os << '\n';
  for (std::size_t r = 0; r < confusion.size(); ++r) {
    os << name(r);
    for (long long v : confusion[r]) os << ',' << v;
    os << '\n';
  }
  return os.str();
}

}  // namespace reno::eval
