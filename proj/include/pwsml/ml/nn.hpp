#pragma once

#include "pwsml/ml/model.hpp"
#include "pwsml/rng.hpp"

#include <cstdint>
#include <memory>

namespace pwsml::ml {

/// One sample per row; each row is an h x w x c tensor stored channel-last.
using Batch = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Shape {
  std::size_t h = 1;
  std::size_t w = 1;
  std::size_t c = 1;

  std::size_t size() const noexcept { return h * w * c; }
  bool operator==(const Shape&) const = default;
};

enum class Activation { Linear, ReLU };

struct ParamRef {
  Eigen::MatrixXd* value;
  Eigen::MatrixXd* grad;
};

class Layer {
 public:
  virtual ~Layer() = default;
  virtual std::string name() const = 0;
  /// Binds the input shape, allocates parameters, returns the output shape.
  virtual Shape configure(Shape in) = 0;
  virtual Batch forward(const Batch& x, bool training, SplitMix64& rng) = 0;
  /// Takes dL/d(output) of the last forward call, accumulates parameter
  /// gradients, returns dL/d(input).
  virtual Batch backward(const Batch& dy) = 0;
  virtual std::vector<ParamRef> params() { return {}; }
  /// Layer spec line without parameters, e.g. "dense 64 relu".
  virtual std::string spec() const = 0;
  /// He-normal weights, zero biases.
  virtual void initialize(SplitMix64&) {}

  Shape input_shape() const noexcept { return in_; }
  Shape output_shape() const noexcept { return out_; }

 protected:
  Shape in_;
  Shape out_;
};

class Dense : public Layer {
 public:
  Dense(std::size_t units, Activation act) : units_(units), act_(act) {}
  std::string name() const override { return "dense"; }
  Shape configure(Shape in) override;
  Batch forward(const Batch& x, bool training, SplitMix64& rng) override;
  Batch backward(const Batch& dy) override;
  std::vector<ParamRef> params() override { return {{&w_, &dw_}, {&b_, &db_}}; }
  std::string spec() const override;
  void initialize(SplitMix64& rng) override;

 private:
  std::size_t units_;
  Activation act_;
  Eigen::MatrixXd w_, b_, dw_, db_;
  Batch x_, a_;
};

/// Valid (unpadded) stride-1 convolution computed through im2col.
class Conv2D : public Layer {
 public:
  Conv2D(std::size_t filters, std::size_t kernel, Activation act) : filters_(filters), kernel_(kernel), act_(act) {}
  std::string name() const override { return "conv"; }
  Shape configure(Shape in) override;
  Batch forward(const Batch& x, bool training, SplitMix64& rng) override;
  Batch backward(const Batch& dy) override;
  std::vector<ParamRef> params() override { return {{&w_, &dw_}, {&b_, &db_}}; }
  std::string spec() const override;
  void initialize(SplitMix64& rng) override;

 private:
  std::size_t filters_;
  std::size_t kernel_;
  Activation act_;
  Eigen::MatrixXd w_, b_, dw_, db_;
  std::vector<Batch> cols_;
  Batch a_;
};

/// Non-overlapping max pooling; trailing rows/columns that do not fill a
/// window are dropped.
class MaxPool2D : public Layer {
 public:
  explicit MaxPool2D(std::size_t size) : size_(size) {}
  std::string name() const override { return "maxpool"; }
  Shape configure(Shape in) override;
  Batch forward(const Batch& x, bool training, SplitMix64& rng) override;
  Batch backward(const Batch& dy) override;
  std::string spec() const override;

 private:
  std::size_t size_;
  std::vector<std::size_t> argmax_;
  Eigen::Index rows_ = 0;
};

class Flatten : public Layer {
 public:
  std::string name() const override { return "flatten"; }
  Shape configure(Shape in) override;
  Batch forward(const Batch& x, bool, SplitMix64&) override { return x; }
  Batch backward(const Batch& dy) override { return dy; }
  std::string spec() const override { return "flatten"; }
};

/// Inverted dropout: active only in training mode.
class Dropout : public Layer {
 public:
  explicit Dropout(double rate);
  std::string name() const override { return "dropout"; }
  Shape configure(Shape in) override;
  Batch forward(const Batch& x, bool training, SplitMix64& rng) override;
  Batch backward(const Batch& dy) override;
  std::string spec() const override;

 private:
  double rate_;
  Batch mask_;
  bool active_ = false;
};

class Softmax : public Layer {
 public:
  std::string name() const override { return "softmax"; }
  Shape configure(Shape in) override;
  Batch forward(const Batch& x, bool training, SplitMix64& rng) override;
  Batch backward(const Batch& dy) override;
  std::string spec() const override { return "softmax"; }

 private:
  Batch p_;
};

struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t step = 0;
  std::vector<Eigen::MatrixXd> m;
  std::vector<Eigen::MatrixXd> v;
};

/// Sequential stack ending in Softmax. Loss is mean cross-entropy; the
/// softmax and loss gradients are fused into (P - onehot) / batch.
class NeuralNet {
 public:
  explicit NeuralNet(Shape input) : input_(input), shape_(input) {}
  NeuralNet(NeuralNet&&) = default;
  NeuralNet& operator=(NeuralNet&&) = default;

  NeuralNet& add(std::unique_ptr<Layer> layer);
  template <class L, class... Args>
  NeuralNet& emplace(Args&&... args) {
    return add(std::make_unique<L>(std::forward<Args>(args)...));
  }

  void initialize(std::uint64_t seed);
  Batch forward(const Batch& x, bool training, SplitMix64& rng);
  /// Inference pass (dropout off).
  Batch predict_proba(const Batch& x);
  /// Forward + backward; gradients are left in each layer. Returns the loss.
  double loss_and_gradients(const Batch& x, const std::vector<int>& y, bool training, SplitMix64& rng);
  double loss(const Batch& x, const std::vector<int>& y);

  std::vector<ParamRef> params();
  std::size_t parameter_count();
  Eigen::VectorXd flat_parameters();

  Shape input_shape() const noexcept { return input_; }
  Shape output_shape() const noexcept { return shape_; }
  std::size_t n_outputs() const noexcept { return shape_.size(); }
  const std::vector<std::unique_ptr<Layer>>& layers() const noexcept { return layers_; }
  AdamState& adam() noexcept { return adam_; }

  void write(std::ostream& out);
  static NeuralNet read(detail::TokenReader& in);

 private:
  Shape input_;
  Shape shape_;
  std::vector<std::unique_ptr<Layer>> layers_;
  AdamState adam_;
};

struct MlpArch {
  std::size_t n_inputs = 0;
  std::vector<std::size_t> hidden{64, 32, 16};
  std::size_t n_outputs = 4;
  double dropout = 0.2;
};

NeuralNet build_mlp(const MlpArch& arch, std::uint64_t seed = 0);

/// conv 32 3x3 relu -> maxpool 2 -> flatten -> dense 256 relu -> dropout 0.5
/// -> dense 512 relu -> dense n_classes -> softmax.
NeuralNet build_cnn(std::size_t h, std::size_t w, std::size_t n_classes = 2, std::uint64_t seed = 0);

struct TrainConfig {
  std::size_t epochs = 100;
  std::size_t batch_size = 32;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t seed = 0;
};

struct TrainHistory {
  std::vector<double> loss;
};

/// Mini-batch Adam with a seeded shuffle per epoch. Labels must lie in
/// [0, n_outputs). Throws DivergedTraining on a non-finite loss.
TrainHistory train_nn(NeuralNet& net, const Batch& x, const std::vector<int>& y, const TrainConfig& cfg);

/// Largest |analytic - numeric| / max(|analytic|, |numeric|, 1e-6) over every
/// parameter, numeric gradients by central differences with step h.
double gradient_check(NeuralNet& net, const Batch& x, const std::vector<int>& y, double h = 1e-5);

/// Classifier wrapper; labels are used directly as output indices.
class NeuralClassifier : public Classifier {
 public:
  NeuralClassifier(std::string kind, NeuralNet net) : kind_(std::move(kind)), net_(std::move(net)) {}
  std::string kind() const override { return kind_; }
  std::vector<int> predict(const FeatureMatrix& x) const override;
  NeuralNet& net() noexcept { return net_; }
  const TrainHistory& history() const noexcept { return history_; }

 private:
  void save_body(std::ostream& out) const override;
  std::string kind_;
  mutable NeuralNet net_;
  TrainHistory history_;

  friend NeuralClassifier train_neural_classifier(const std::string&, NeuralNet, const Dataset&,
                                                  const TrainConfig&, bool);
  friend std::unique_ptr<Classifier> load_model(std::istream&);
};

/// Fits the standardizer (when `standardize`), trains, and records the
/// hyperparameters.
NeuralClassifier train_neural_classifier(const std::string& kind, NeuralNet net, const Dataset& train,
                                         const TrainConfig& cfg, bool standardize);

}  // namespace pwsml::ml
