#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace pwsml {

using FeatureMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// Feature matrix plus integer labels. Labels are raw class values (a period,
/// a behaviour id); when label_names is non-empty every label indexes into it.
struct Dataset {
  FeatureMatrix features;
  std::vector<int> labels;
  std::vector<std::string> column_names;
  std::vector<std::string> label_names;
  KeyValues provenance;

  std::size_t rows() const noexcept { return labels.size(); }
  std::size_t cols() const noexcept { return static_cast<std::size_t>(features.cols()); }

  /// Throws ShapeMismatch / InvalidArgument when an invariant is broken.
  void validate() const;
  Dataset subset(const std::vector<std::size_t>& rows) const;
};

struct SplitDataset {
  Dataset train;
  Dataset test;
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
  double test_fraction = 0.2;
  std::uint64_t seed = 0;
};

/// Seeded shuffle then partition; the test part gets round(n * fraction) rows,
/// clamped so both sides are non-empty.
SplitDataset split_dataset(const Dataset& ds, double test_fraction, std::uint64_t seed);

/// Header `col1,...,colN,label`, one row per sample, features printed with 17
/// significant digits.
void write_csv(const Dataset& ds, std::ostream& out);
void write_csv(const Dataset& ds, const std::string& path);
Dataset read_csv(std::istream& in);
Dataset read_csv(const std::string& path);

/// Per-column z-scoring fitted on one matrix and applied to others. Constant
/// columns get unit scale.
struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;

  static Standardizer fit(const FeatureMatrix& x);
  FeatureMatrix apply(const FeatureMatrix& x) const;
  bool empty() const noexcept { return mean.size() == 0; }
};

/// Sorted distinct labels.
std::vector<int> distinct_labels(const std::vector<int>& labels);

}  // namespace pwsml
