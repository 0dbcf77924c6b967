#pragma once

#include "pwsml/bifurcation.hpp"
#include "pwsml/dataset.hpp"
#include "pwsml/ml/metrics.hpp"
#include "pwsml/ml/nn.hpp"
#include "pwsml/raster.hpp"

#include <cstdint>

namespace pwsml {

/// Regular cells white, chaotic black, diverging mid-grey. Image row 0 is the
/// largest tau_R so the picture reads like a plot.
RasterImage chart_image(const ChartGrid& chart);

/// Closed rectangle in (tau_L, tau_R).
struct ChartRegion {
  double tau_l_lo = 0.0;
  double tau_l_hi = 2.0;
  double tau_r_lo = 0.6;
  double tau_r_hi = 1.0;

  bool contains(double tl, double tr) const noexcept {
    return tl >= tau_l_lo && tl <= tau_l_hi && tr >= tau_r_lo && tr <= tau_r_hi;
  }
};

/// Non-diverging cells as rows (tau_L, tau_R) -> label; with a region, only
/// the cells inside it. `cells` receives the chart index of every row.
Dataset chart_dataset(const ChartGrid& chart, const ChartRegion* region, std::vector<std::size_t>* cells = nullptr);

struct ChartPredictConfig {
  ChartRegion region;
  double holdout_fraction = 0.2;
  ml::MlpArch arch{2, {64, 32, 16}, 2, 0.0};
  ml::TrainConfig train{1000, 32, 1e-3, 0.9, 0.999, 1e-8, 0};
  std::uint64_t seed = 0;
};

struct ChartPrediction {
  ChartGrid predicted;
  ml::EvalReport holdout;
  /// Agreement with the ground truth over all non-diverging cells.
  double full_grid_agreement = 0.0;
  std::size_t train_rows = 0;
};

/// Trains an MLP on the region's cells (minus a held-out part), scores the
/// held-out cells, and predicts every cell of the grid.
ChartPrediction predict_chart(const ChartGrid& truth, const ChartPredictConfig& cfg);

}  // namespace pwsml
