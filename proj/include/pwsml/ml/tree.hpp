#pragma once

#include "pwsml/ml/model.hpp"
#include "pwsml/rng.hpp"

#include <cstdint>
#include <limits>

namespace pwsml::ml {

/// Flat tree node. `feature < 0` marks a leaf; rows with
/// x[feature] <= threshold go left.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  /// Index into the owning model's classes().
  int cls = 0;
  std::vector<std::size_t> histogram;

  bool is_leaf() const noexcept { return feature < 0; }
};

struct TreeParams {
  std::size_t max_depth = std::numeric_limits<std::size_t>::max();
  std::size_t min_leaf = 1;
  /// Candidate features per split; 0 means all of them.
  std::size_t max_features = 0;
};

/// Node 0 is the root.
struct Tree {
  std::vector<TreeNode> nodes;

  int leaf_class(const double* row) const;
  std::size_t depth() const;
  std::size_t leaf_count() const;
};

namespace detail {

/// CART on Gini impurity. `y` holds class indices < n_classes. With a
/// non-null rng and max_features < width, each split looks at a random
/// feature subset.
Tree grow_tree(const FeatureMatrix& x, const std::vector<int>& y, std::size_t n_classes,
               const std::vector<std::size_t>& rows, const TreeParams& params, SplitMix64* rng);

}  // namespace detail

class DecisionTree : public Classifier {
 public:
  std::string kind() const override { return "dtc"; }
  std::vector<int> predict(const FeatureMatrix& x) const override;
  const Tree& tree() const noexcept { return tree_; }

 private:
  void save_body(std::ostream& out) const override;
  Tree tree_;

  friend DecisionTree train_decision_tree(const Dataset&, const TreeParams&);
  friend std::unique_ptr<Classifier> load_model(std::istream&);
};

DecisionTree train_decision_tree(const Dataset& train, const TreeParams& params = {});

struct ForestParams {
  std::size_t n_trees = 100;
  std::size_t max_depth = std::numeric_limits<std::size_t>::max();
  std::size_t min_leaf = 1;
  /// 0 means floor(sqrt(width)), at least 1.
  std::size_t max_features = 0;
  bool bootstrap = true;
  std::uint64_t seed = 0;
};

class RandomForest : public Classifier {
 public:
  std::string kind() const override { return "rf"; }
  std::vector<int> predict(const FeatureMatrix& x) const override;
  const std::vector<Tree>& trees() const noexcept { return trees_; }
  std::size_t features_per_split() const noexcept { return features_per_split_; }

 private:
  void save_body(std::ostream& out) const override;
  std::vector<Tree> trees_;
  std::size_t features_per_split_ = 1;

  friend RandomForest train_random_forest(const Dataset&, const ForestParams&);
  friend std::unique_ptr<Classifier> load_model(std::istream&);
};

RandomForest train_random_forest(const Dataset& train, const ForestParams& params = {});

namespace detail {
void write_tree(std::ostream& out, const Tree& tree);
Tree read_tree(TokenReader& in, std::size_t n_classes, std::size_t n_features);
}  // namespace detail

}  // namespace pwsml::ml
