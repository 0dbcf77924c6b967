#pragma once

#include "pwsml/bifurcation.hpp"
#include "pwsml/dataset.hpp"
#include "pwsml/dynamics.hpp"
#include "pwsml/raster.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace pwsml {

/// One row per grid point with a detected period: (param, final state...) ->
/// period. Aperiodic and diverging points are dropped; the count of dropped
/// points is recorded in the provenance.
Dataset gen_period_dataset(const SweepSpec& spec, std::size_t max_period);

enum class ImageFamily { TentCobweb, LoziPortrait };

const char* family_name(ImageFamily family) noexcept;

struct ImageDatasetConfig {
  ImageFamily family = ImageFamily::TentCobweb;
  std::size_t n_samples = 1000;
  std::size_t resolution = 64;
  std::uint64_t seed = 0;
  /// Cobweb iterations drawn per image.
  std::size_t cobweb_steps = 500;
  /// Orbit points scattered per phase portrait.
  std::size_t portrait_points = 2000;
  IterationConfig iteration;
  std::size_t workers = 1;
};

struct ImageDataset {
  ImageFamily family = ImageFamily::TentCobweb;
  std::vector<RasterImage> images;
  std::vector<int> labels;
  std::vector<double> params;
  std::vector<double> lambda1;
  std::size_t resampled = 0;
  KeyValues provenance;
};

/// Parameter ranges: tent mu in (-1.5, 1.5) from x0 = 0.1; Lozi a in
/// (-0.1, 1.7), b = 0.5, x0 uniform in [-0.5, 0.5]^2. Label is 1 when the
/// largest Lyapunov exponent is positive.
ImageDataset gen_image_dataset(const ImageDatasetConfig& cfg);

/// Fixed portrait window used for Lozi images.
Window lozi_portrait_window();

/// Pixels become features in [0, 1] with ink = 1.
Dataset to_dataset(const ImageDataset& images);

struct OrbitDatasetConfig {
  double delta_r_lo = -1.05;
  double delta_r_hi = -0.85;
  std::size_t n_samples = 500;
  std::size_t window = 64;
  std::uint64_t seed = 0;
  Pws3DParams base;
  IterationConfig iteration;
  std::size_t workers = 1;
};

struct OrbitFeatureDataset {
  Dataset data;
  std::vector<double> delta_r;
  std::size_t excluded = 0;
};

/// Flattened window of post-transient 3D states labelled with the behaviour
/// class of its Lyapunov spectrum (0/1/2).
OrbitFeatureDataset gen_orbit_feature_dataset(const OrbitDatasetConfig& cfg);

}  // namespace pwsml
