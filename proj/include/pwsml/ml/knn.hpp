#pragma once

#include "pwsml/ml/model.hpp"

namespace pwsml::ml {

/// Lazy k-nearest-neighbours on standardized features. Distance ties go to
/// the lower training row, vote ties to the smaller class.
class Knn : public Classifier {
 public:
  std::string kind() const override { return "knn"; }
  std::vector<int> predict(const FeatureMatrix& x) const override;
  std::size_t k() const noexcept { return k_; }

 private:
  void save_body(std::ostream& out) const override;
  std::size_t k_ = 5;
  FeatureMatrix points_;
  std::vector<int> targets_;

  friend Knn train_knn(const Dataset&, std::size_t);
  friend std::unique_ptr<Classifier> load_model(std::istream&);
};

Knn train_knn(const Dataset& train, std::size_t k = 5);

}  // namespace pwsml::ml
