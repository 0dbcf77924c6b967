#pragma once

#include "pwsml/dataset.hpp"

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace pwsml::ml {

inline constexpr const char* kModelFormat = "pwsml-model";
inline constexpr int kModelVersion = 1;

/// Common interface of every trained model. Predictions are raw labels, the
/// same values that appear in the training dataset.
class Classifier {
 public:
  virtual ~Classifier() = default;

  virtual std::string kind() const = 0;
  virtual std::vector<int> predict(const FeatureMatrix& x) const = 0;

  std::size_t n_features() const noexcept { return n_features_; }
  const std::vector<int>& classes() const noexcept { return classes_; }
  const Standardizer& standardizer() const noexcept { return standardizer_; }
  /// Training hyperparameters, echoed into reports and manifests.
  const KeyValues& hyperparameters() const noexcept { return hyper_; }

  void save(std::ostream& out) const;
  void save(const std::string& path) const;

 protected:
  virtual void save_body(std::ostream& out) const = 0;
  /// Throws IncompatibleModel when the width differs from training.
  void check_width(const FeatureMatrix& x) const;
  /// Index of `label` in classes(), or -1.
  int class_index(int label) const;

  std::vector<int> classes_;
  std::size_t n_features_ = 0;
  Standardizer standardizer_;
  KeyValues hyper_;

  friend std::unique_ptr<Classifier> load_model(std::istream& in);
};

std::unique_ptr<Classifier> load_model(std::istream& in);
std::unique_ptr<Classifier> load_model(const std::string& path);

namespace detail {

/// Whitespace-token reader for the model format with line-aware errors.
class TokenReader {
 public:
  explicit TokenReader(std::istream& in) : in_(in) {}
  std::string word();
  void expect(const std::string& keyword);
  double number();
  long long integer();
  std::size_t count();

 private:
  std::istream& in_;
};

void write_vector(std::ostream& out, const Eigen::VectorXd& v);
Eigen::VectorXd read_vector(TokenReader& in);
void write_matrix(std::ostream& out, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix(TokenReader& in);

/// Throws EmptyDataset / ShapeMismatch for unusable training data.
void check_training_data(const Dataset& train);

}  // namespace detail

}  // namespace pwsml::ml
