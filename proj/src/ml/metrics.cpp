#include "pwsml/ml/metrics.hpp"

#include "pwsml/error.hpp"
#include "pwsml/format.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>

namespace pwsml::ml {

std::vector<std::vector<double>> EvalReport::heatmap() const {
  std::vector<std::vector<double>> out(confusion.size());
  for (std::size_t t = 0; t < confusion.size(); ++t) {
    out[t].assign(confusion[t].size(), 0.0);
    if (support[t] == 0) continue;
    for (std::size_t p = 0; p < confusion[t].size(); ++p) {
      out[t][p] = static_cast<double>(confusion[t][p]) / static_cast<double>(support[t]);
    }
  }
  return out;
}

double EvalReport::class_accuracy(int label) const {
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (classes[i] == label) return per_class_accuracy[i];
  }
  return std::numeric_limits<double>::quiet_NaN();
}

EvalReport evaluate(const std::vector<int>& truth, const std::vector<int>& predicted) {
  if (truth.empty()) throw Error(ErrorCode::EmptyDataset, "EmptyDataset: nothing to evaluate");
  if (truth.size() != predicted.size()) throw Error(ErrorCode::ShapeMismatch, "truth and predictions differ in length");
  EvalReport r;
  r.n = truth.size();
  std::set<int> all(truth.begin(), truth.end());
  all.insert(predicted.begin(), predicted.end());
  r.classes.assign(all.begin(), all.end());
  const std::size_t k = r.classes.size();
  auto index = [&](int label) {
    return static_cast<std::size_t>(std::lower_bound(r.classes.begin(), r.classes.end(), label) - r.classes.begin());
  };
  r.confusion.assign(k, std::vector<std::size_t>(k, 0));
  r.support.assign(k, 0);
  std::vector<double> pred_sum(k, 0.0);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const std::size_t t = index(truth[i]);
    ++r.confusion[t][index(predicted[i])];
    ++r.support[t];
    pred_sum[t] += predicted[i];
    if (truth[i] == predicted[i]) ++correct;
  }
  r.accuracy = static_cast<double>(correct) / static_cast<double>(r.n);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t t = 0; t < k; ++t) {
    const auto s = static_cast<double>(r.support[t]);
    r.per_class_accuracy.push_back(r.support[t] ? static_cast<double>(r.confusion[t][t]) / s : nan);
    r.mean_predicted.push_back(r.support[t] ? pred_sum[t] / s : nan);
  }
  return r;
}

EvalReport evaluate(const Classifier& model, const Dataset& test) {
  if (test.rows() == 0) throw Error(ErrorCode::EmptyDataset, "EmptyDataset: test set has no rows");
  EvalReport r = evaluate(test.labels, model.predict(test.features));
  r.info.emplace_back("model", model.kind());
  for (const auto& [k, v] : model.hyperparameters()) r.info.emplace_back(k, v);
  return r;
}

void write_report_csv(const EvalReport& r, std::ostream& out) {
  out << "section,key,value\n";
  out << "summary,n," << r.n << '\n';
  out << "summary,accuracy," << format_g17(r.accuracy) << '\n';
  for (const auto& [k, v] : r.info) out << "summary," << k << ',' << v << '\n';

  out << "\nclass,support,accuracy,mean_predicted\n";
  for (std::size_t i = 0; i < r.classes.size(); ++i) {
    out << r.classes[i] << ',' << r.support[i] << ',' << format_g17(r.per_class_accuracy[i]) << ','
        << format_g17(r.mean_predicted[i]) << '\n';
  }

  auto header = [&](const char* name) {
    out << '\n' << name;
    for (int c : r.classes) out << ",pred_" << c;
    out << '\n';
  };
  header("confusion");
  for (std::size_t t = 0; t < r.classes.size(); ++t) {
    out << r.classes[t];
    for (std::size_t p : r.confusion[t]) out << ',' << p;
    out << '\n';
  }
  header("heatmap");
  const auto hm = r.heatmap();
  for (std::size_t t = 0; t < r.classes.size(); ++t) {
    out << r.classes[t];
    for (double v : hm[t]) out << ',' << format_g17(v);
    out << '\n';
  }
}

std::string report_text(const EvalReport& r) {
  std::ostringstream out;
  out << "accuracy " << format_short(r.accuracy) << " on " << r.n << " rows\n";
  for (const auto& [k, v] : r.info) out << "  " << k << " = " << v << '\n';
  out << "class  support  accuracy  mean_pred\n";
  for (std::size_t i = 0; i < r.classes.size(); ++i) {
    char line[128];
    std::snprintf(line, sizeof line, "%5d  %7zu  %8.4f  %9.4f\n", r.classes[i], r.support[i], r.per_class_accuracy[i],
                  r.mean_predicted[i]);
    out << line;
  }
  out << "confusion (rows = true, cols = predicted)\n";
  for (std::size_t t = 0; t < r.classes.size(); ++t) {
    char head[16];
    std::snprintf(head, sizeof head, "%5d ", r.classes[t]);
    out << head;
    for (std::size_t p : r.confusion[t]) {
      char cell[24];
      std::snprintf(cell, sizeof cell, " %6zu", p);
      out << cell;
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace pwsml::ml
