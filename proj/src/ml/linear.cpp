#include "pwsml/ml/linear.hpp"

#include "pwsml/error.hpp"
#include "pwsml/format.hpp"
#include "pwsml/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

namespace pwsml::ml {

namespace {

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& s) {
  Eigen::MatrixXd p(s.rows(), s.cols());
  for (Eigen::Index r = 0; r < s.rows(); ++r) {
    const double m = s.row(r).maxCoeff();
    p.row(r) = (s.row(r).array() - m).exp();
    p.row(r) /= p.row(r).sum();
  }
  return p;
}

void check_finite(const Eigen::MatrixXd& w, const Eigen::VectorXd& b, std::size_t epoch) {
  if (!w.allFinite() || !b.allFinite()) {
    throw Error(ErrorCode::DivergedTraining,
                "DivergedTraining: parameters became non-finite at epoch " + std::to_string(epoch));
  }
}

}  // namespace

Eigen::MatrixXd LinearModel::scores(const FeatureMatrix& x) const {
  check_width(x);
  const FeatureMatrix z = standardizer_.apply(x);
  Eigen::MatrixXd s = z * weights_.transpose();
  s.rowwise() += biases_.transpose();
  return s;
}

Eigen::MatrixXd LinearModel::probabilities(const FeatureMatrix& x) const { return softmax_rows(scores(x)); }

std::vector<int> LinearModel::predict(const FeatureMatrix& x) const {
  const Eigen::MatrixXd s = scores(x);
  std::vector<int> out(static_cast<std::size_t>(s.rows()));
  for (Eigen::Index r = 0; r < s.rows(); ++r) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < s.cols(); ++c) {
      if (s(r, c) > s(r, best)) best = c;
    }
    out[static_cast<std::size_t>(r)] = classes_[static_cast<std::size_t>(best)];
  }
  return out;
}

void LinearModel::save_body(std::ostream& out) const {
  out << "weights ";
  detail::write_matrix(out, weights_);
  out << "biases ";
  detail::write_vector(out, biases_);
}

LinearModel train_logistic_regression(const Dataset& train, std::size_t epochs, double lr) {
  detail::check_training_data(train);
  LinearModel m;
  m.kind_ = LinearKind::Logistic;
  m.classes_ = distinct_labels(train.labels);
  m.n_features_ = train.cols();
  m.standardizer_ = Standardizer::fit(train.features);
  const FeatureMatrix x = m.standardizer_.apply(train.features);
  const auto k = static_cast<Eigen::Index>(m.classes_.size());
  const auto n = x.rows();
  m.weights_ = Eigen::MatrixXd::Zero(k, x.cols());
  m.biases_ = Eigen::VectorXd::Zero(k);

  Eigen::MatrixXd onehot = Eigen::MatrixXd::Zero(n, k);
  for (Eigen::Index r = 0; r < n; ++r) onehot(r, m.class_index(train.labels[static_cast<std::size_t>(r)])) = 1.0;

  for (std::size_t e = 0; e < epochs; ++e) {
    Eigen::MatrixXd s = x * m.weights_.transpose();
    s.rowwise() += m.biases_.transpose();
    const Eigen::MatrixXd g = (softmax_rows(s) - onehot) / static_cast<double>(n);
    m.weights_ -= lr * (g.transpose() * x);
    m.biases_ -= lr * g.colwise().sum().transpose();
    check_finite(m.weights_, m.biases_, e);
  }
  m.hyper_ = {{"epochs", std::to_string(epochs)}, {"lr", format_short(lr)}, {"standardized", "true"}};
  return m;
}

LinearModel train_linear_svm(const Dataset& train, std::size_t epochs, double lr, double reg, std::uint64_t seed) {
  detail::check_training_data(train);
  LinearModel m;
  m.kind_ = LinearKind::Svm;
  m.classes_ = distinct_labels(train.labels);
  m.n_features_ = train.cols();
  m.standardizer_ = Standardizer::fit(train.features);
  const FeatureMatrix x = m.standardizer_.apply(train.features);
  const auto k = static_cast<Eigen::Index>(m.classes_.size());
  const auto n = static_cast<std::size_t>(x.rows());
  m.weights_ = Eigen::MatrixXd::Zero(k, x.cols());
  m.biases_ = Eigen::VectorXd::Zero(k);

  std::vector<int> y(n);
  for (std::size_t r = 0; r < n; ++r) y[r] = m.class_index(train.labels[r]);

  // A single class needs no boundary: the zero model already predicts it.
  if (k > 1) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t e = 0; e < epochs; ++e) {
      SplitMix64 rng = stream(seed, e, 0x5B3);
      for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[static_cast<std::size_t>(rng.below(i + 1))]);
      // Step size decays as 1/sqrt(epoch) so late epochs refine instead of oscillate.
      const double step = lr / std::sqrt(1.0 + static_cast<double>(e));
      for (std::size_t r : order) {
        const auto row = x.row(static_cast<Eigen::Index>(r));
        for (Eigen::Index c = 0; c < k; ++c) {
          const double t = y[r] == c ? 1.0 : -1.0;
          const double margin = t * (m.weights_.row(c).dot(row) + m.biases_[c]);
          m.weights_.row(c) *= 1.0 - step * reg;
          if (margin < 1.0) {
            m.weights_.row(c) += step * t * row;
            m.biases_[c] += step * t;
          }
        }
      }
      check_finite(m.weights_, m.biases_, e);
    }
  }
  m.hyper_ = {{"epochs", std::to_string(epochs)}, {"lr", format_short(lr)}, {"reg", format_short(reg)},
              {"seed", std::to_string(seed)}, {"standardized", "true"}};
  return m;
}

}  // namespace pwsml::ml
