#include "pwsml/pipeline.hpp"

#include "pwsml/error.hpp"
#include "pwsml/format.hpp"

#include <algorithm>

namespace pwsml {

RasterImage chart_image(const ChartGrid& chart) {
  RasterImage img = RasterImage::blank(chart.cols(), chart.rows());
  for (std::size_t r = 0; r < chart.rows(); ++r) {
    for (std::size_t c = 0; c < chart.cols(); ++c) {
      const std::size_t i = chart.index(r, c);
      const std::uint8_t v = chart.diverged[i] ? 128 : (chart.labels[i] == 0 ? kBackground : kInk);
      img.set(c, chart.rows() - 1 - r, v);
    }
  }
  return img;
}

Dataset chart_dataset(const ChartGrid& chart, const ChartRegion* region, std::vector<std::size_t>* cells) {
  std::vector<std::size_t> keep;
  for (std::size_t r = 0; r < chart.rows(); ++r) {
    for (std::size_t c = 0; c < chart.cols(); ++c) {
      const std::size_t i = chart.index(r, c);
      if (chart.diverged[i]) continue;
      if (region != nullptr && !region->contains(chart.tau_l.at(c), chart.tau_r.at(r))) continue;
      keep.push_back(i);
    }
  }
  Dataset ds;
  ds.column_names = {"tau_l", "tau_r"};
  ds.label_names = {"regular", "chaotic"};
  ds.features.resize(static_cast<Eigen::Index>(keep.size()), 2);
  for (std::size_t k = 0; k < keep.size(); ++k) {
    const std::size_t r = keep[k] / chart.cols();
    const std::size_t c = keep[k] % chart.cols();
    ds.features(static_cast<Eigen::Index>(k), 0) = chart.tau_l.at(c);
    ds.features(static_cast<Eigen::Index>(k), 1) = chart.tau_r.at(r);
    ds.labels.push_back(chart.labels[keep[k]]);
  }
  if (cells != nullptr) *cells = std::move(keep);
  return ds;
}

ChartPrediction predict_chart(const ChartGrid& truth, const ChartPredictConfig& cfg) {
  const Dataset region = chart_dataset(truth, &cfg.region);
  if (region.rows() < 2) throw Error(ErrorCode::TooFewRows, "TooFewRows: training region holds fewer than two cells");
  const SplitDataset split = split_dataset(region, cfg.holdout_fraction, cfg.seed);

  ml::MlpArch arch = cfg.arch;
  arch.n_inputs = 2;
  ml::TrainConfig tc = cfg.train;
  tc.seed = cfg.seed;
  auto model = ml::train_neural_classifier("mlp", ml::build_mlp(arch, cfg.seed), split.train, tc, true);

  ChartPrediction out;
  out.train_rows = split.train.rows();
  out.holdout = ml::evaluate(model, split.test);
  const ChartRegion& g = cfg.region;
  out.holdout.info.emplace_back("region", "tau_l:" + format_short(g.tau_l_lo) + ":" + format_short(g.tau_l_hi) +
                                              ";tau_r:" + format_short(g.tau_r_lo) + ":" + format_short(g.tau_r_hi));

  out.predicted = truth;
  out.predicted.source = ChartSource::Predicted;
  FeatureMatrix all(static_cast<Eigen::Index>(truth.rows() * truth.cols()), 2);
  for (std::size_t r = 0; r < truth.rows(); ++r) {
    for (std::size_t c = 0; c < truth.cols(); ++c) {
      all(static_cast<Eigen::Index>(truth.index(r, c)), 0) = truth.tau_l.at(c);
      all(static_cast<Eigen::Index>(truth.index(r, c)), 1) = truth.tau_r.at(r);
    }
  }
  out.predicted.labels = model.predict(all);
  std::fill(out.predicted.diverged.begin(), out.predicted.diverged.end(), 0);
  std::fill(out.predicted.lambda1.begin(), out.predicted.lambda1.end(), 0.0);

  std::size_t agree = 0;
  std::size_t total = 0;
  for (std::size_t i = 0; i < truth.labels.size(); ++i) {
    if (truth.diverged[i]) continue;
    ++total;
    agree += truth.labels[i] == out.predicted.labels[i] ? 1 : 0;
  }
  out.full_grid_agreement = total ? static_cast<double>(agree) / static_cast<double>(total) : 0.0;
  return out;
}

}  // namespace pwsml
