#include "pwsml/ml/model.hpp"

#include "pwsml/error.hpp"
#include "pwsml/format.hpp"
#include "pwsml/ml/knn.hpp"
#include "pwsml/ml/linear.hpp"
#include "pwsml/ml/nn.hpp"
#include "pwsml/ml/tree.hpp"

#include <fstream>
#include <istream>
#include <ostream>

namespace pwsml::ml {

void Classifier::save(std::ostream& out) const {
  out << kModelFormat << ' ' << kModelVersion << '\n';
  out << "kind " << kind() << '\n';
  out << "features " << n_features_ << '\n';
  out << "classes " << classes_.size();
  for (int c : classes_) out << ' ' << c;
  out << '\n';
  out << "hyper " << hyper_.size() << '\n';
  for (const auto& [k, v] : hyper_) out << k << ' ' << v << '\n';
  if (standardizer_.empty()) {
    out << "standardizer 0\n";
  } else {
    out << "standardizer 1\n";
    detail::write_vector(out, standardizer_.mean);
    detail::write_vector(out, standardizer_.scale);
  }
  save_body(out);
  out << "end\n";
}

void Classifier::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot open '" + path + "' for writing");
  save(out);
  if (!out) throw Error(ErrorCode::IoError, "write to '" + path + "' failed");
}

void Classifier::check_width(const FeatureMatrix& x) const {
  if (static_cast<std::size_t>(x.cols()) != n_features_) {
    throw Error(ErrorCode::IncompatibleModel, "model expects " + std::to_string(n_features_) +
                                                  " features, input has " + std::to_string(x.cols()));
  }
}

int Classifier::class_index(int label) const {
  for (std::size_t i = 0; i < classes_.size(); ++i) {
    if (classes_[i] == label) return static_cast<int>(i);
  }
  return -1;
}

std::unique_ptr<Classifier> load_model(std::istream& in) {
  detail::TokenReader r(in);
  if (r.word() != kModelFormat) throw Error(ErrorCode::IncompatibleModel, "not a pwsml model file");
  if (r.integer() != kModelVersion) throw Error(ErrorCode::IncompatibleModel, "unsupported model version");
  r.expect("kind");
  const std::string kind = r.word();
  r.expect("features");
  const std::size_t n_features = r.count();
  r.expect("classes");
  std::vector<int> classes(r.count());
  for (auto& c : classes) c = static_cast<int>(r.integer());
  r.expect("hyper");
  KeyValues hyper(r.count());
  for (auto& [k, v] : hyper) {
    k = r.word();
    v = r.word();
  }
  r.expect("standardizer");
  Standardizer standardizer;
  if (r.count() == 1) {
    standardizer.mean = detail::read_vector(r);
    standardizer.scale = detail::read_vector(r);
  }

  std::unique_ptr<Classifier> model;
  if (kind == "dtc") {
    auto m = std::make_unique<DecisionTree>();
    m->tree_ = detail::read_tree(r, classes.size(), n_features);
    model = std::move(m);
  } else if (kind == "rf") {
    auto m = std::make_unique<RandomForest>();
    r.expect("split_features");
    m->features_per_split_ = r.count();
    r.expect("trees");
    m->trees_.resize(r.count());
    for (auto& t : m->trees_) t = detail::read_tree(r, classes.size(), n_features);
    model = std::move(m);
  } else if (kind == "knn") {
    auto m = std::make_unique<Knn>();
    r.expect("k");
    m->k_ = r.count();
    r.expect("points");
    const Eigen::MatrixXd pts = detail::read_matrix(r);
    m->points_ = pts;
    m->targets_.resize(static_cast<std::size_t>(pts.rows()));
    for (auto& t : m->targets_) t = static_cast<int>(r.integer());
    model = std::move(m);
  } else if (kind == "logreg" || kind == "svm") {
    auto m = std::make_unique<LinearModel>();
    m->kind_ = kind == "logreg" ? LinearKind::Logistic : LinearKind::Svm;
    r.expect("weights");
    m->weights_ = detail::read_matrix(r);
    r.expect("biases");
    m->biases_ = detail::read_vector(r);
    model = std::move(m);
  } else if (kind == "mlp" || kind == "cnn") {
    model = std::make_unique<NeuralClassifier>(kind, NeuralNet::read(r));
  } else {
    throw Error(ErrorCode::IncompatibleModel, "unknown model kind '" + kind + "'");
  }
  r.expect("end");
  model->classes_ = std::move(classes);
  model->n_features_ = n_features;
  model->standardizer_ = std::move(standardizer);
  model->hyper_ = std::move(hyper);
  return model;
}

std::unique_ptr<Classifier> load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
  return load_model(in);
}

namespace detail {

std::string TokenReader::word() {
  std::string w;
  if (!(in_ >> w)) throw Error(ErrorCode::IncompatibleModel, "model file ends early");
  return w;
}

void TokenReader::expect(const std::string& keyword) {
  const std::string w = word();
  if (w != keyword) {
    throw Error(ErrorCode::IncompatibleModel, "model file: expected '" + keyword + "', found '" + w + "'");
  }
}

double TokenReader::number() {
  const std::string w = word();
  double v = 0.0;
  if (!parse_double(w, v)) throw Error(ErrorCode::IncompatibleModel, "model file: bad number '" + w + "'");
  return v;
}

long long TokenReader::integer() {
  const std::string w = word();
  long long v = 0;
  if (!parse_int(w, v)) throw Error(ErrorCode::IncompatibleModel, "model file: bad integer '" + w + "'");
  return v;
}

std::size_t TokenReader::count() {
  const long long v = integer();
  if (v < 0) throw Error(ErrorCode::IncompatibleModel, "model file: negative count");
  return static_cast<std::size_t>(v);
}

void write_vector(std::ostream& out, const Eigen::VectorXd& v) {
  out << v.size();
  for (Eigen::Index i = 0; i < v.size(); ++i) out << ' ' << format_g17(v[i]);
  out << '\n';
}

Eigen::VectorXd read_vector(TokenReader& in) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(in.count()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = in.number();
  return v;
}

void write_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
  out << m.rows() << ' ' << m.cols() << '\n';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) out << (c ? " " : "") << format_g17(m(r, c));
    out << '\n';
  }
}

Eigen::MatrixXd read_matrix(TokenReader& in) {
  const auto rows = static_cast<Eigen::Index>(in.count());
  const auto cols = static_cast<Eigen::Index>(in.count());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = in.number();
  }
  return m;
}

void check_training_data(const Dataset& train) {
  if (train.rows() == 0) throw Error(ErrorCode::EmptyDataset, "EmptyDataset: training set has no rows");
  if (train.cols() == 0) throw Error(ErrorCode::ShapeMismatch, "training set has no feature columns");
  if (static_cast<std::size_t>(train.features.rows()) != train.labels.size()) {
    throw Error(ErrorCode::ShapeMismatch, "feature rows and labels disagree");
  }
}

}  // namespace detail

}  // namespace pwsml::ml
