#pragma once

#include "pwsml/ml/model.hpp"

#include <cstdint>

namespace pwsml::ml {

enum class LinearKind { Logistic, Svm };

/// Scores are x W^T + b on standardized features; the prediction is the
/// highest score, ties to the smaller class.
class LinearModel : public Classifier {
 public:
  std::string kind() const override { return kind_ == LinearKind::Logistic ? "logreg" : "svm"; }
  std::vector<int> predict(const FeatureMatrix& x) const override;
  /// Softmax of the scores (meaningful for the logistic kind).
  Eigen::MatrixXd probabilities(const FeatureMatrix& x) const;
  Eigen::MatrixXd scores(const FeatureMatrix& x) const;

  LinearKind linear_kind() const noexcept { return kind_; }
  /// n_classes x n_features.
  const Eigen::MatrixXd& weights() const noexcept { return weights_; }
  const Eigen::VectorXd& biases() const noexcept { return biases_; }

 private:
  void save_body(std::ostream& out) const override;
  LinearKind kind_ = LinearKind::Logistic;
  Eigen::MatrixXd weights_;
  Eigen::VectorXd biases_;

  friend LinearModel train_logistic_regression(const Dataset&, std::size_t, double);
  friend LinearModel train_linear_svm(const Dataset&, std::size_t, double, double, std::uint64_t);
  friend std::unique_ptr<Classifier> load_model(std::istream&);
};

/// Multinomial softmax regression, zero init, full-batch gradient descent.
LinearModel train_logistic_regression(const Dataset& train, std::size_t epochs = 500, double lr = 0.1);

/// One-vs-rest hinge loss with L2 penalty, SGD over a seeded row order.
LinearModel train_linear_svm(const Dataset& train, std::size_t epochs = 500, double lr = 0.1,
                             double reg = 1e-4, std::uint64_t seed = 0);

}  // namespace pwsml::ml
