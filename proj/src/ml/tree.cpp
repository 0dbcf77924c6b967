#include "pwsml/ml/tree.hpp"

#include "pwsml/error.hpp"
#include "pwsml/format.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

namespace pwsml::ml {

int Tree::leaf_class(const double* row) const {
  int i = 0;
  while (!nodes[static_cast<std::size_t>(i)].is_leaf()) {
    const TreeNode& n = nodes[static_cast<std::size_t>(i)];
    i = row[n.feature] <= n.threshold ? n.left : n.right;
  }
  return nodes[static_cast<std::size_t>(i)].cls;
}

std::size_t Tree::depth() const {
  std::size_t best = 0;
  std::vector<std::pair<int, std::size_t>> stack{{0, 0}};
  while (!stack.empty()) {
    const auto [i, d] = stack.back();
    stack.pop_back();
    const TreeNode& n = nodes[static_cast<std::size_t>(i)];
    if (n.is_leaf()) {
      best = std::max(best, d);
    } else {
      stack.emplace_back(n.left, d + 1);
      stack.emplace_back(n.right, d + 1);
    }
  }
  return best;
}

std::size_t Tree::leaf_count() const {
  return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

namespace detail {

namespace {

struct Grower {
  const FeatureMatrix& x;
  const std::vector<int>& y;
  std::size_t n_classes;
  TreeParams params;
  SplitMix64* rng;
  Tree tree;

  struct Split {
    bool found = false;
    double impurity = 0.0;
    int feature = -1;
    double threshold = 0.0;
  };

  static int majority(const std::vector<std::size_t>& hist) {
    return static_cast<int>(std::max_element(hist.begin(), hist.end()) - hist.begin());
  }

  // Weighted Gini n - sum(count^2)/n of both children, evaluated at every
  // boundary between distinct sorted values of one feature.
  void scan_feature(int f, std::vector<std::size_t>& rows, const std::vector<std::size_t>& hist, Split& best) const {
    std::sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) {
      const double va = x(static_cast<Eigen::Index>(a), f);
      const double vb = x(static_cast<Eigen::Index>(b), f);
      return va < vb || (va == vb && a < b);
    });
    const std::size_t n = rows.size();
    std::vector<long long> left(n_classes, 0);
    std::vector<long long> right(hist.begin(), hist.end());
    long long sq_left = 0;
    long long sq_right = 0;
    for (long long c : right) sq_right += c * c;
    const double eps = 1e-12 * static_cast<double>(n);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const auto c = static_cast<std::size_t>(y[rows[i]]);
      sq_left += 2 * left[c] + 1;
      sq_right -= 2 * right[c] - 1;
      ++left[c];
      --right[c];
      const double v = x(static_cast<Eigen::Index>(rows[i]), f);
      const double next = x(static_cast<Eigen::Index>(rows[i + 1]), f);
      if (v == next) continue;
      const std::size_t nl = i + 1;
      const std::size_t nr = n - nl;
      if (nl < params.min_leaf || nr < params.min_leaf) continue;
      const double imp = (static_cast<double>(nl) - static_cast<double>(sq_left) / static_cast<double>(nl)) +
                         (static_cast<double>(nr) - static_cast<double>(sq_right) / static_cast<double>(nr));
      double thr = v + (next - v) / 2.0;
      if (!(thr < next)) thr = v;
      const bool better = !best.found || imp < best.impurity - eps ||
                          (std::abs(imp - best.impurity) <= eps &&
                           (f < best.feature || (f == best.feature && thr < best.threshold)));
      if (better) best = {true, imp, f, thr};
    }
  }

  bool is_constant(int f, const std::vector<std::size_t>& rows) const {
    const double v0 = x(static_cast<Eigen::Index>(rows.front()), f);
    for (std::size_t r : rows) {
      if (x(static_cast<Eigen::Index>(r), f) != v0) return false;
    }
    return true;
  }

  int build(std::vector<std::size_t> rows, std::size_t depth) {
    const int index = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    std::vector<std::size_t> hist(n_classes, 0);
    for (std::size_t r : rows) ++hist[static_cast<std::size_t>(y[r])];
    tree.nodes.back().histogram = hist;
    tree.nodes.back().cls = majority(hist);

    const bool pure = std::count_if(hist.begin(), hist.end(), [](std::size_t c) { return c > 0; }) <= 1;
    if (pure || depth >= params.max_depth || rows.size() < 2 * params.min_leaf) return index;

    const auto width = static_cast<std::size_t>(x.cols());
    std::vector<int> order(width);
    std::iota(order.begin(), order.end(), 0);
    std::size_t wanted = width;
    if (rng != nullptr && params.max_features > 0 && params.max_features < width) {
      wanted = params.max_features;
      for (std::size_t i = width - 1; i > 0; --i) {
        std::swap(order[i], order[static_cast<std::size_t>(rng->below(i + 1))]);
      }
    }

    Split best;
    std::vector<std::size_t> scratch = rows;
    std::size_t visited = 0;
    for (std::size_t k = 0; k < width && visited < wanted; ++k) {
      if (wanted < width && is_constant(order[k], rows)) continue;
      ++visited;
      scan_feature(order[k], scratch, hist, best);
    }
    if (!best.found) return index;

    std::vector<std::size_t> lrows;
    std::vector<std::size_t> rrows;
    for (std::size_t r : rows) {
      (x(static_cast<Eigen::Index>(r), best.feature) <= best.threshold ? lrows : rrows).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    const int l = build(std::move(lrows), depth + 1);
    const int r = build(std::move(rrows), depth + 1);
    TreeNode& node = tree.nodes[static_cast<std::size_t>(index)];
    node.feature = best.feature;
    node.threshold = best.threshold;
    node.left = l;
    node.right = r;
    return index;
  }
};

}  // namespace

Tree grow_tree(const FeatureMatrix& x, const std::vector<int>& y, std::size_t n_classes,
               const std::vector<std::size_t>& rows, const TreeParams& params, SplitMix64* rng) {
  if (rows.empty()) throw Error(ErrorCode::EmptyDataset, "EmptyDataset: no rows to grow a tree on");
  Grower g{x, y, n_classes, params, rng, {}};
  if (g.params.min_leaf == 0) g.params.min_leaf = 1;
  g.build(rows, 0);
  return std::move(g.tree);
}

void write_tree(std::ostream& out, const Tree& tree) {
  out << "tree " << tree.nodes.size() << '\n';
  for (const auto& n : tree.nodes) {
    out << n.feature << ' ' << format_g17(n.threshold) << ' ' << n.left << ' ' << n.right << ' ' << n.cls;
    for (std::size_t h : n.histogram) out << ' ' << h;
    out << '\n';
  }
}

Tree read_tree(TokenReader& in, std::size_t n_classes, std::size_t n_features) {
  in.expect("tree");
  Tree t;
  t.nodes.resize(in.count());
  if (t.nodes.empty()) throw Error(ErrorCode::IncompatibleModel, "model file: empty tree");
  const auto n_nodes = static_cast<long long>(t.nodes.size());
  for (auto& n : t.nodes) {
    n.feature = static_cast<int>(in.integer());
    n.threshold = in.number();
    n.left = static_cast<int>(in.integer());
    n.right = static_cast<int>(in.integer());
    n.cls = static_cast<int>(in.integer());
    n.histogram.resize(n_classes);
    for (auto& h : n.histogram) h = in.count();
    const bool bad_split = !n.is_leaf() && (static_cast<std::size_t>(n.feature) >= n_features || n.left <= 0 ||
                                            n.right <= 0 || n.left >= n_nodes || n.right >= n_nodes);
    if (bad_split || n.cls < 0 || static_cast<std::size_t>(n.cls) >= n_classes) {
      throw Error(ErrorCode::IncompatibleModel, "model file: malformed tree node");
    }
  }
  return t;
}

}  // namespace detail

namespace {

std::vector<int> encode_labels(const std::vector<int>& labels, const std::vector<int>& classes) {
  std::vector<int> y(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    y[i] = static_cast<int>(std::lower_bound(classes.begin(), classes.end(), labels[i]) - classes.begin());
  }
  return y;
}

std::string depth_text(std::size_t d) {
  return d == std::numeric_limits<std::size_t>::max() ? "unlimited" : std::to_string(d);
}

}  // namespace

DecisionTree train_decision_tree(const Dataset& train, const TreeParams& params) {
  detail::check_training_data(train);
  DecisionTree m;
  m.classes_ = distinct_labels(train.labels);
  m.n_features_ = train.cols();
  const auto y = encode_labels(train.labels, m.classes_);
  std::vector<std::size_t> rows(train.rows());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  TreeParams p = params;
  p.max_features = 0;
  m.tree_ = detail::grow_tree(train.features, y, m.classes_.size(), rows, p, nullptr);
  m.hyper_ = {{"max_depth", depth_text(params.max_depth)}, {"min_leaf", std::to_string(params.min_leaf)}};
  return m;
}

std::vector<int> DecisionTree::predict(const FeatureMatrix& x) const {
  check_width(x);
  std::vector<int> out(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    out[static_cast<std::size_t>(r)] = classes_[static_cast<std::size_t>(tree_.leaf_class(x.row(r).data()))];
  }
  return out;
}

void DecisionTree::save_body(std::ostream& out) const { detail::write_tree(out, tree_); }

RandomForest train_random_forest(const Dataset& train, const ForestParams& params) {
  detail::check_training_data(train);
  if (params.n_trees < 1) throw Error(ErrorCode::InvalidArgument, "a forest needs at least one tree");
  RandomForest m;
  m.classes_ = distinct_labels(train.labels);
  m.n_features_ = train.cols();
  const auto y = encode_labels(train.labels, m.classes_);
  const std::size_t n = train.rows();
  const std::size_t width = train.cols();
  m.features_per_split_ = params.max_features > 0
                              ? std::min(params.max_features, width)
                              : std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(width))));

  TreeParams tp;
  tp.max_depth = params.max_depth;
  tp.min_leaf = params.min_leaf;
  tp.max_features = m.features_per_split_;
  m.trees_.reserve(params.n_trees);
  for (std::size_t t = 0; t < params.n_trees; ++t) {
    SplitMix64 rng = stream(params.seed, t, 0x7EE);
    std::vector<std::size_t> rows(n);
    if (params.bootstrap) {
      for (auto& r : rows) r = static_cast<std::size_t>(rng.below(n));
      std::sort(rows.begin(), rows.end());
    } else {
      std::iota(rows.begin(), rows.end(), std::size_t{0});
    }
    m.trees_.push_back(detail::grow_tree(train.features, y, m.classes_.size(), rows, tp, &rng));
  }
  m.hyper_ = {{"n_trees", std::to_string(params.n_trees)},
              {"max_depth", depth_text(params.max_depth)},
              {"min_leaf", std::to_string(params.min_leaf)},
              {"features_per_split", std::to_string(m.features_per_split_)},
              {"bootstrap", params.bootstrap ? "true" : "false"},
              {"seed", std::to_string(params.seed)}};
  return m;
}

std::vector<int> RandomForest::predict(const FeatureMatrix& x) const {
  check_width(x);
  std::vector<int> out(static_cast<std::size_t>(x.rows()));
  std::vector<std::size_t> votes(classes_.size());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    std::fill(votes.begin(), votes.end(), 0);
    for (const auto& t : trees_) ++votes[static_cast<std::size_t>(t.leaf_class(x.row(r).data()))];
    const auto best = std::max_element(votes.begin(), votes.end()) - votes.begin();
    out[static_cast<std::size_t>(r)] = classes_[static_cast<std::size_t>(best)];
  }
  return out;
}

void RandomForest::save_body(std::ostream& out) const {
  out << "split_features " << features_per_split_ << '\n';
  out << "trees " << trees_.size() << '\n';
  for (const auto& t : trees_) detail::write_tree(out, t);
}

}  // namespace pwsml::ml
