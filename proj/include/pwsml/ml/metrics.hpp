#pragma once

#include "pwsml/ml/model.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace pwsml::ml {

struct EvalReport {
  std::size_t n = 0;
  double accuracy = 0.0;
  /// Union of true and predicted labels, sorted.
  std::vector<int> classes;
  /// Per class: rows with that true label.
  std::vector<std::size_t> support;
  /// Per class: fraction of its rows predicted correctly (NaN with no support).
  std::vector<double> per_class_accuracy;
  /// Per class: mean predicted label over rows with that true label.
  std::vector<double> mean_predicted;
  /// confusion[t][p]: rows with true classes[t] predicted as classes[p].
  std::vector<std::vector<std::size_t>> confusion;
  KeyValues info;

  /// Confusion rows divided by their support (the true-vs-predicted heatmap).
  std::vector<std::vector<double>> heatmap() const;
  double class_accuracy(int label) const;
};

/// Throws EmptyDataset for empty input, ShapeMismatch on length mismatch.
EvalReport evaluate(const std::vector<int>& truth, const std::vector<int>& predicted);
EvalReport evaluate(const Classifier& model, const Dataset& test);

/// Sections: summary, per_class, confusion, heatmap.
void write_report_csv(const EvalReport& report, std::ostream& out);
std::string report_text(const EvalReport& report);

}  // namespace pwsml::ml
