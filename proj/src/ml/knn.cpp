#include "pwsml/ml/knn.hpp"

#include "pwsml/error.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>

namespace pwsml::ml {

Knn train_knn(const Dataset& train, std::size_t k) {
  detail::check_training_data(train);
  if (k < 1 || k > train.rows()) {
    throw Error(ErrorCode::InvalidArgument,
                "k must lie in [1, " + std::to_string(train.rows()) + "], got " + std::to_string(k));
  }
  Knn m;
  m.classes_ = distinct_labels(train.labels);
  m.n_features_ = train.cols();
  m.standardizer_ = Standardizer::fit(train.features);
  m.points_ = m.standardizer_.apply(train.features);
  m.targets_ = train.labels;
  m.k_ = k;
  m.hyper_ = {{"k", std::to_string(k)}, {"standardized", "true"}};
  return m;
}

std::vector<int> Knn::predict(const FeatureMatrix& x) const {
  check_width(x);
  const FeatureMatrix q = standardizer_.apply(x);
  const auto n = static_cast<std::size_t>(points_.rows());
  std::vector<int> out(static_cast<std::size_t>(q.rows()));
  std::vector<double> dist(n);
  std::vector<std::size_t> order(n);
  std::vector<std::size_t> votes(classes_.size());
  for (Eigen::Index r = 0; r < q.rows(); ++r) {
    for (std::size_t i = 0; i < n; ++i) {
      dist[i] = (points_.row(static_cast<Eigen::Index>(i)) - q.row(r)).squaredNorm();
    }
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k_), order.end(),
                      [&](std::size_t a, std::size_t b) { return dist[a] < dist[b] || (dist[a] == dist[b] && a < b); });
    std::fill(votes.begin(), votes.end(), 0);
    for (std::size_t j = 0; j < k_; ++j) ++votes[static_cast<std::size_t>(class_index(targets_[order[j]]))];
    const auto best = std::max_element(votes.begin(), votes.end()) - votes.begin();
    out[static_cast<std::size_t>(r)] = classes_[static_cast<std::size_t>(best)];
  }
  return out;
}

void Knn::save_body(std::ostream& out) const {
  out << "k " << k_ << '\n';
  out << "points ";
  detail::write_matrix(out, points_);
  for (std::size_t i = 0; i < targets_.size(); ++i) out << (i ? " " : "") << targets_[i];
  out << '\n';
}

}  // namespace pwsml::ml
