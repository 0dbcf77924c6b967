#include "pwsml/ml/nn.hpp"

#include "pwsml/error.hpp"
#include "pwsml/format.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

namespace pwsml::ml {

namespace {

using RowMap = Eigen::Map<Batch>;
using ConstRowMap = Eigen::Map<const Batch>;

const char* activation_name(Activation a) { return a == Activation::ReLU ? "relu" : "linear"; }

Activation parse_activation(const std::string& s) {
  if (s == "relu") return Activation::ReLU;
  if (s == "linear") return Activation::Linear;
  throw Error(ErrorCode::IncompatibleModel, "unknown activation '" + s + "'");
}

void he_normal(Eigen::MatrixXd& w, std::size_t fan_in, SplitMix64& rng) {
  const double sd = std::sqrt(2.0 / static_cast<double>(fan_in));
  for (Eigen::Index c = 0; c < w.cols(); ++c) {
    for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = sd * rng.normal();
  }
}

void relu_inplace(Batch& a) { a = a.cwiseMax(0.0); }

Batch relu_mask(const Batch& dy, const Batch& a) {
  return (a.array() > 0.0).select(dy, Batch::Zero(dy.rows(), dy.cols()));
}

}  // namespace

Shape Dense::configure(Shape in) {
  if (units_ == 0) throw Error(ErrorCode::ShapeMismatch, "dense layer needs at least one unit");
  in_ = in;
  out_ = {1, 1, units_};
  const auto n_in = static_cast<Eigen::Index>(in.size());
  const auto n_out = static_cast<Eigen::Index>(units_);
  w_ = Eigen::MatrixXd::Zero(n_in, n_out);
  dw_ = Eigen::MatrixXd::Zero(n_in, n_out);
  b_ = Eigen::MatrixXd::Zero(1, n_out);
  db_ = Eigen::MatrixXd::Zero(1, n_out);
  return out_;
}

void Dense::initialize(SplitMix64& rng) {
  he_normal(w_, in_.size(), rng);
  b_.setZero();
}

Batch Dense::forward(const Batch& x, bool, SplitMix64&) {
  x_ = x;
  a_ = x * w_;
  a_.rowwise() += b_.row(0);
  if (act_ == Activation::ReLU) relu_inplace(a_);
  return a_;
}

Batch Dense::backward(const Batch& dy) {
  const Batch dz = act_ == Activation::ReLU ? relu_mask(dy, a_) : dy;
  dw_ = x_.transpose() * dz;
  db_ = dz.colwise().sum();
  return dz * w_.transpose();
}

std::string Dense::spec() const { return "dense " + std::to_string(units_) + " " + activation_name(act_); }

Shape Conv2D::configure(Shape in) {
  if (filters_ == 0 || kernel_ == 0) throw Error(ErrorCode::ShapeMismatch, "conv layer needs filters and a kernel");
  if (in.h < kernel_ || in.w < kernel_) {
    throw Error(ErrorCode::ShapeMismatch, "conv kernel " + std::to_string(kernel_) + " larger than input " +
                                              std::to_string(in.h) + "x" + std::to_string(in.w));
  }
  in_ = in;
  out_ = {in.h - kernel_ + 1, in.w - kernel_ + 1, filters_};
  const auto patch = static_cast<Eigen::Index>(kernel_ * kernel_ * in.c);
  const auto f = static_cast<Eigen::Index>(filters_);
  w_ = Eigen::MatrixXd::Zero(patch, f);
  dw_ = Eigen::MatrixXd::Zero(patch, f);
  b_ = Eigen::MatrixXd::Zero(1, f);
  db_ = Eigen::MatrixXd::Zero(1, f);
  return out_;
}

void Conv2D::initialize(SplitMix64& rng) {
  he_normal(w_, kernel_ * kernel_ * in_.c, rng);
  b_.setZero();
}

Batch Conv2D::forward(const Batch& x, bool, SplitMix64&) {
  const std::size_t ho = out_.h, wo = out_.w, k = kernel_, c = in_.c, w_in = in_.w;
  const auto positions = static_cast<Eigen::Index>(ho * wo);
  const auto patch = static_cast<Eigen::Index>(k * k * c);
  cols_.resize(static_cast<std::size_t>(x.rows()));
  a_.resize(x.rows(), static_cast<Eigen::Index>(out_.size()));
  for (Eigen::Index s = 0; s < x.rows(); ++s) {
    Batch& p = cols_[static_cast<std::size_t>(s)];
    p.resize(positions, patch);
    const double* src = x.row(s).data();
    for (std::size_t i = 0; i < ho; ++i) {
      for (std::size_t j = 0; j < wo; ++j) {
        double* dst = p.row(static_cast<Eigen::Index>(i * wo + j)).data();
        for (std::size_t di = 0; di < k; ++di) {
          const double* line = src + ((i + di) * w_in + j) * c;
          std::copy(line, line + k * c, dst + di * k * c);
        }
      }
    }
    RowMap out(a_.row(s).data(), positions, static_cast<Eigen::Index>(filters_));
    out.noalias() = p * w_;
    out.rowwise() += b_.row(0);
  }
  if (act_ == Activation::ReLU) relu_inplace(a_);
  return a_;
}

Batch Conv2D::backward(const Batch& dy) {
  const std::size_t ho = out_.h, wo = out_.w, k = kernel_, c = in_.c, w_in = in_.w;
  const auto positions = static_cast<Eigen::Index>(ho * wo);
  const Batch dz = act_ == Activation::ReLU ? relu_mask(dy, a_) : dy;
  dw_.setZero();
  db_.setZero();
  Batch dx = Batch::Zero(dy.rows(), static_cast<Eigen::Index>(in_.size()));
  for (Eigen::Index s = 0; s < dy.rows(); ++s) {
    const ConstRowMap d(dz.row(s).data(), positions, static_cast<Eigen::Index>(filters_));
    const Batch& p = cols_[static_cast<std::size_t>(s)];
    dw_.noalias() += p.transpose() * d;
    db_ += d.colwise().sum();
    const Batch dp = d * w_.transpose();
    double* dst = dx.row(s).data();
    for (std::size_t i = 0; i < ho; ++i) {
      for (std::size_t j = 0; j < wo; ++j) {
        const double* src = dp.row(static_cast<Eigen::Index>(i * wo + j)).data();
        for (std::size_t di = 0; di < k; ++di) {
          double* line = dst + ((i + di) * w_in + j) * c;
          for (std::size_t t = 0; t < k * c; ++t) line[t] += src[di * k * c + t];
        }
      }
    }
  }
  return dx;
}

std::string Conv2D::spec() const {
  return "conv " + std::to_string(filters_) + " " + std::to_string(kernel_) + " " + activation_name(act_);
}

Shape MaxPool2D::configure(Shape in) {
  if (size_ == 0 || in.h < size_ || in.w < size_) throw Error(ErrorCode::ShapeMismatch, "pool window larger than input");
  in_ = in;
  out_ = {in.h / size_, in.w / size_, in.c};
  return out_;
}

Batch MaxPool2D::forward(const Batch& x, bool, SplitMix64&) {
  const std::size_t ho = out_.h, wo = out_.w, c = in_.c, w_in = in_.w, p = size_;
  const std::size_t n_out = out_.size();
  rows_ = x.rows();
  argmax_.assign(static_cast<std::size_t>(x.rows()) * n_out, 0);
  Batch y(x.rows(), static_cast<Eigen::Index>(n_out));
  for (Eigen::Index s = 0; s < x.rows(); ++s) {
    const double* src = x.row(s).data();
    double* dst = y.row(s).data();
    std::size_t* arg = argmax_.data() + static_cast<std::size_t>(s) * n_out;
    for (std::size_t i = 0; i < ho; ++i) {
      for (std::size_t j = 0; j < wo; ++j) {
        for (std::size_t ch = 0; ch < c; ++ch) {
          std::size_t best = (i * p * w_in + j * p) * c + ch;
          for (std::size_t di = 0; di < p; ++di) {
            for (std::size_t dj = 0; dj < p; ++dj) {
              const std::size_t idx = ((i * p + di) * w_in + (j * p + dj)) * c + ch;
              if (src[idx] > src[best]) best = idx;
            }
          }
          const std::size_t o = (i * wo + j) * c + ch;
          dst[o] = src[best];
          arg[o] = best;
        }
      }
    }
  }
  return y;
}

Batch MaxPool2D::backward(const Batch& dy) {
  const std::size_t n_out = out_.size();
  Batch dx = Batch::Zero(dy.rows(), static_cast<Eigen::Index>(in_.size()));
  for (Eigen::Index s = 0; s < dy.rows(); ++s) {
    const std::size_t* arg = argmax_.data() + static_cast<std::size_t>(s) * n_out;
    for (std::size_t o = 0; o < n_out; ++o) dx(s, static_cast<Eigen::Index>(arg[o])) += dy(s, static_cast<Eigen::Index>(o));
  }
  return dx;
}

std::string MaxPool2D::spec() const { return "maxpool " + std::to_string(size_); }

Shape Flatten::configure(Shape in) {
  in_ = in;
  out_ = {1, 1, in.size()};
  return out_;
}

Dropout::Dropout(double rate) : rate_(rate) {
  if (!(rate >= 0.0 && rate < 1.0)) throw Error(ErrorCode::InvalidArgument, "dropout rate must lie in [0, 1)");
}

Shape Dropout::configure(Shape in) {
  in_ = in;
  out_ = in;
  return out_;
}

Batch Dropout::forward(const Batch& x, bool training, SplitMix64& rng) {
  active_ = training && rate_ > 0.0;
  if (!active_) return x;
  mask_.resize(x.rows(), x.cols());
  const double keep = 1.0 / (1.0 - rate_);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) mask_(r, c) = rng.uniform() >= rate_ ? keep : 0.0;
  }
  return x.cwiseProduct(mask_);
}

Batch Dropout::backward(const Batch& dy) { return active_ ? Batch(dy.cwiseProduct(mask_)) : dy; }

std::string Dropout::spec() const { return "dropout " + format_g17(rate_); }

Shape Softmax::configure(Shape in) {
  in_ = in;
  out_ = {1, 1, in.size()};
  return out_;
}

Batch Softmax::forward(const Batch& x, bool, SplitMix64&) {
  p_.resize(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double m = x.row(r).maxCoeff();
    p_.row(r) = (x.row(r).array() - m).exp();
    p_.row(r) /= p_.row(r).sum();
  }
  return p_;
}

Batch Softmax::backward(const Batch& dy) {
  Batch dx(dy.rows(), dy.cols());
  for (Eigen::Index r = 0; r < dy.rows(); ++r) {
    const double dot = dy.row(r).dot(p_.row(r));
    dx.row(r) = p_.row(r).cwiseProduct((dy.row(r).array() - dot).matrix());
  }
  return dx;
}

NeuralNet& NeuralNet::add(std::unique_ptr<Layer> layer) {
  shape_ = layer->configure(shape_);
  layers_.push_back(std::move(layer));
  return *this;
}

void NeuralNet::initialize(std::uint64_t seed) {
  SplitMix64 rng = stream(seed, 0, 0x1417);
  for (auto& l : layers_) l->initialize(rng);
  adam_ = AdamState{};
}

Batch NeuralNet::forward(const Batch& x, bool training, SplitMix64& rng) {
  if (static_cast<std::size_t>(x.cols()) != input_.size()) {
    throw Error(ErrorCode::ShapeMismatch, "network expects " + std::to_string(input_.size()) + " inputs, got " +
                                              std::to_string(x.cols()));
  }
  Batch a = x;
  for (auto& l : layers_) a = l->forward(a, training, rng);
  return a;
}

Batch NeuralNet::predict_proba(const Batch& x) {
  SplitMix64 unused(0);
  return forward(x, false, unused);
}

namespace {

double cross_entropy(const Batch& p, const std::vector<int>& y) {
  double sum = 0.0;
  for (Eigen::Index r = 0; r < p.rows(); ++r) sum -= std::log(std::max(p(r, y[static_cast<std::size_t>(r)]), 1e-300));
  return sum / static_cast<double>(p.rows());
}

}  // namespace

double NeuralNet::loss_and_gradients(const Batch& x, const std::vector<int>& y, bool training, SplitMix64& rng) {
  if (layers_.empty() || layers_.back()->name() != "softmax") {
    throw Error(ErrorCode::ShapeMismatch, "network must end with a softmax layer");
  }
  if (static_cast<std::size_t>(x.rows()) != y.size()) throw Error(ErrorCode::ShapeMismatch, "batch and labels disagree");
  const Batch p = forward(x, training, rng);
  const double loss = cross_entropy(p, y);
  Batch g = p;
  for (Eigen::Index r = 0; r < g.rows(); ++r) g(r, y[static_cast<std::size_t>(r)]) -= 1.0;
  g /= static_cast<double>(g.rows());
  for (std::size_t i = layers_.size() - 1; i-- > 0;) g = layers_[i]->backward(g);
  return loss;
}

double NeuralNet::loss(const Batch& x, const std::vector<int>& y) { return cross_entropy(predict_proba(x), y); }

std::vector<ParamRef> NeuralNet::params() {
  std::vector<ParamRef> out;
  for (auto& l : layers_) {
    for (const auto& p : l->params()) out.push_back(p);
  }
  return out;
}

std::size_t NeuralNet::parameter_count() {
  std::size_t n = 0;
  for (const auto& p : params()) n += static_cast<std::size_t>(p.value->size());
  return n;
}

Eigen::VectorXd NeuralNet::flat_parameters() {
  Eigen::VectorXd out(static_cast<Eigen::Index>(parameter_count()));
  Eigen::Index at = 0;
  for (const auto& p : params()) {
    out.segment(at, p.value->size()) = p.value->reshaped();
    at += p.value->size();
  }
  return out;
}

void NeuralNet::write(std::ostream& out) {
  out << "net " << input_.h << ' ' << input_.w << ' ' << input_.c << '\n';
  out << "layers " << layers_.size() << '\n';
  for (auto& l : layers_) {
    out << l->spec() << '\n';
    const auto ps = l->params();
    out << "params " << ps.size() << '\n';
    for (const auto& p : ps) detail::write_matrix(out, *p.value);
  }
}

NeuralNet NeuralNet::read(detail::TokenReader& in) {
  in.expect("net");
  Shape s;
  s.h = in.count();
  s.w = in.count();
  s.c = in.count();
  NeuralNet net(s);
  in.expect("layers");
  const std::size_t n = in.count();
  for (std::size_t i = 0; i < n; ++i) {
    const std::string kind = in.word();
    if (kind == "dense") {
      const std::size_t units = in.count();
      net.emplace<Dense>(units, parse_activation(in.word()));
    } else if (kind == "conv") {
      const std::size_t filters = in.count();
      const std::size_t kernel = in.count();
      net.emplace<Conv2D>(filters, kernel, parse_activation(in.word()));
    } else if (kind == "maxpool") {
      net.emplace<MaxPool2D>(in.count());
    } else if (kind == "flatten") {
      net.emplace<Flatten>();
    } else if (kind == "dropout") {
      net.emplace<Dropout>(in.number());
    } else if (kind == "softmax") {
      net.emplace<Softmax>();
    } else {
      throw Error(ErrorCode::IncompatibleModel, "unknown layer '" + kind + "'");
    }
    in.expect("params");
    const auto ps = net.layers_.back()->params();
    if (in.count() != ps.size()) throw Error(ErrorCode::IncompatibleModel, "layer parameter count mismatch");
    for (const auto& p : ps) {
      Eigen::MatrixXd m = detail::read_matrix(in);
      if (m.rows() != p.value->rows() || m.cols() != p.value->cols()) {
        throw Error(ErrorCode::IncompatibleModel, "layer parameter shape mismatch");
      }
      *p.value = std::move(m);
    }
  }
  return net;
}

NeuralNet build_mlp(const MlpArch& arch, std::uint64_t seed) {
  if (arch.n_inputs == 0 || arch.n_outputs == 0) throw Error(ErrorCode::ShapeMismatch, "MLP needs inputs and outputs");
  NeuralNet net(Shape{1, 1, arch.n_inputs});
  for (std::size_t units : arch.hidden) {
    net.emplace<Dense>(units, Activation::ReLU);
    if (arch.dropout > 0.0) net.emplace<Dropout>(arch.dropout);
  }
  net.emplace<Dense>(arch.n_outputs, Activation::Linear);
  net.emplace<Softmax>();
  net.initialize(seed);
  return net;
}

NeuralNet build_cnn(std::size_t h, std::size_t w, std::size_t n_classes, std::uint64_t seed) {
  if (h < 4 || w < 4) throw Error(ErrorCode::ShapeMismatch, "CNN input must be at least 4x4");
  NeuralNet net(Shape{h, w, 1});
  net.emplace<Conv2D>(32, 3, Activation::ReLU);
  net.emplace<MaxPool2D>(2);
  net.emplace<Flatten>();
  net.emplace<Dense>(256, Activation::ReLU);
  net.emplace<Dropout>(0.5);
  net.emplace<Dense>(512, Activation::ReLU);
  net.emplace<Dense>(n_classes, Activation::Linear);
  net.emplace<Softmax>();
  net.initialize(seed);
  return net;
}

TrainHistory train_nn(NeuralNet& net, const Batch& x, const std::vector<int>& y, const TrainConfig& cfg) {
  const auto n = static_cast<std::size_t>(x.rows());
  if (n == 0) throw Error(ErrorCode::EmptyDataset, "EmptyDataset: no training rows");
  if (y.size() != n) throw Error(ErrorCode::ShapeMismatch, "features and labels disagree");
  if (static_cast<std::size_t>(x.cols()) != net.input_shape().size()) {
    throw Error(ErrorCode::ShapeMismatch, "network expects " + std::to_string(net.input_shape().size()) +
                                              " inputs, dataset has " + std::to_string(x.cols()));
  }
  for (int label : y) {
    if (label < 0 || static_cast<std::size_t>(label) >= net.n_outputs()) {
      throw Error(ErrorCode::InvalidArgument,
                  "label " + std::to_string(label) + " outside the " + std::to_string(net.n_outputs()) + " outputs");
    }
  }
  const std::size_t batch = std::max<std::size_t>(1, cfg.batch_size);

  auto params = net.params();
  AdamState& adam = net.adam();
  adam.lr = cfg.lr;
  adam.beta1 = cfg.beta1;
  adam.beta2 = cfg.beta2;
  adam.eps = cfg.eps;
  if (adam.m.size() != params.size()) {
    adam.m.clear();
    adam.v.clear();
    for (const auto& p : params) {
      adam.m.push_back(Eigen::MatrixXd::Zero(p.value->rows(), p.value->cols()));
      adam.v.push_back(Eigen::MatrixXd::Zero(p.value->rows(), p.value->cols()));
    }
    adam.step = 0;
  }

  TrainHistory history;
  std::vector<std::size_t> order(n);
  Batch xb;
  std::vector<int> yb;
  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    SplitMix64 shuffle = stream(cfg.seed, e, 0x5F);
    for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[static_cast<std::size_t>(shuffle.below(i + 1))]);
    SplitMix64 drop = stream(cfg.seed, e, 0xD0);

    double total = 0.0;
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t len = std::min(batch, n - start);
      xb.resize(static_cast<Eigen::Index>(len), x.cols());
      yb.resize(len);
      for (std::size_t i = 0; i < len; ++i) {
        xb.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(order[start + i]));
        yb[i] = y[order[start + i]];
      }
      const double l = net.loss_and_gradients(xb, yb, true, drop);
      if (!std::isfinite(l)) {
        throw Error(ErrorCode::DivergedTraining, "DivergedTraining: non-finite loss at epoch " + std::to_string(e));
      }
      total += l * static_cast<double>(len);

      ++adam.step;
      const double c1 = 1.0 - std::pow(adam.beta1, static_cast<double>(adam.step));
      const double c2 = 1.0 - std::pow(adam.beta2, static_cast<double>(adam.step));
      for (std::size_t k = 0; k < params.size(); ++k) {
        auto g = params[k].grad->array();
        auto m = adam.m[k].array();
        auto v = adam.v[k].array();
        m = adam.beta1 * m + (1.0 - adam.beta1) * g;
        v = adam.beta2 * v + (1.0 - adam.beta2) * g.square();
        params[k].value->array() -= adam.lr * (m / c1) / ((v / c2).sqrt() + adam.eps);
      }
    }
    history.loss.push_back(total / static_cast<double>(n));
  }
  return history;
}

double gradient_check(NeuralNet& net, const Batch& x, const std::vector<int>& y, double h) {
  SplitMix64 unused(0);
  net.loss_and_gradients(x, y, false, unused);
  auto params = net.params();
  std::vector<Eigen::MatrixXd> analytic;
  for (const auto& p : params) analytic.push_back(*p.grad);

  double worst = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Eigen::MatrixXd& w = *params[k].value;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      const double saved = w.data()[i];
      w.data()[i] = saved + h;
      const double lp = net.loss(x, y);
      w.data()[i] = saved - h;
      const double lm = net.loss(x, y);
      w.data()[i] = saved;
      const double numeric = (lp - lm) / (2.0 * h);
      const double a = analytic[k].data()[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-6});
      worst = std::max(worst, std::abs(a - numeric) / denom);
    }
  }
  return worst;
}

std::vector<int> NeuralClassifier::predict(const FeatureMatrix& x) const {
  check_width(x);
  const FeatureMatrix z = standardizer_.apply(x);
  std::vector<int> out(static_cast<std::size_t>(z.rows()));
  constexpr Eigen::Index chunk = 64;
  for (Eigen::Index start = 0; start < z.rows(); start += chunk) {
    const Eigen::Index len = std::min(chunk, z.rows() - start);
    const Batch p = net_.predict_proba(z.middleRows(start, len));
    for (Eigen::Index r = 0; r < len; ++r) {
      Eigen::Index best = 0;
      p.row(r).maxCoeff(&best);
      out[static_cast<std::size_t>(start + r)] = static_cast<int>(best);
    }
  }
  return out;
}

void NeuralClassifier::save_body(std::ostream& out) const { net_.write(out); }

NeuralClassifier train_neural_classifier(const std::string& kind, NeuralNet net, const Dataset& train,
                                         const TrainConfig& cfg, bool standardize) {
  detail::check_training_data(train);
  if (train.cols() != net.input_shape().size()) {
    throw Error(ErrorCode::ShapeMismatch, "network expects " + std::to_string(net.input_shape().size()) +
                                              " inputs, dataset has " + std::to_string(train.cols()));
  }
  NeuralClassifier m(kind, std::move(net));
  m.n_features_ = train.cols();
  m.classes_.resize(m.net_.n_outputs());
  std::iota(m.classes_.begin(), m.classes_.end(), 0);
  if (standardize) m.standardizer_ = Standardizer::fit(train.features);
  const FeatureMatrix x = m.standardizer_.apply(train.features);
  m.history_ = train_nn(m.net_, x, train.labels, cfg);
  m.hyper_ = {{"epochs", std::to_string(cfg.epochs)},      {"batch_size", std::to_string(cfg.batch_size)},
              {"lr", format_short(cfg.lr)},                {"beta1", format_short(cfg.beta1)},
              {"beta2", format_short(cfg.beta2)},          {"eps", format_short(cfg.eps)},
              {"seed", std::to_string(cfg.seed)},          {"standardized", standardize ? "true" : "false"},
              {"parameters", std::to_string(m.net_.parameter_count())}};
  return m;
}

}  // namespace pwsml::ml
