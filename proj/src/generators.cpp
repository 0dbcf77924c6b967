#include "pwsml/generators.hpp"

#include "pwsml/error.hpp"
#include "pwsml/format.hpp"
#include "pwsml/parallel.hpp"
#include "pwsml/rng.hpp"

#include <cmath>

namespace pwsml {

namespace {

void add_iteration(KeyValues& kv, const IterationConfig& cfg) {
  kv.emplace_back("transient", std::to_string(cfg.transient));
  kv.emplace_back("iterations", std::to_string(cfg.iterations));
  kv.emplace_back("period_tol", format_short(cfg.period_tol));
  kv.emplace_back("max_period", std::to_string(cfg.max_period));
}

constexpr const char* kStateNames[3] = {"x", "y", "z"};

}  // namespace

Dataset gen_period_dataset(const SweepSpec& spec, std::size_t max_period) {
  SweepSpec local = spec;
  local.iteration.max_period = max_period;
  local.with_lyapunov = false;
  local.attractor_samples = 0;
  const BifurcationScan scan = sweep_1p(local);

  const int dim = spec.base.dim();
  std::vector<std::size_t> keep;
  std::size_t diverged = 0;
  for (std::size_t i = 0; i < scan.records.size(); ++i) {
    const auto& rec = scan.records[i];
    if (rec.diverged) ++diverged;
    if (!rec.diverged && rec.period.period) keep.push_back(i);
  }

  Dataset ds;
  ds.column_names.push_back(spec.param);
  for (int d = 0; d < dim; ++d) ds.column_names.push_back(std::string("final_") + kStateNames[d]);
  ds.features.resize(static_cast<Eigen::Index>(keep.size()), 1 + dim);
  for (std::size_t r = 0; r < keep.size(); ++r) {
    const auto& rec = scan.records[keep[r]];
    const auto row = static_cast<Eigen::Index>(r);
    ds.features(row, 0) = rec.param;
    for (int d = 0; d < dim; ++d) ds.features(row, 1 + d) = rec.period.cycle_points.front()[d];
    ds.labels.push_back(static_cast<int>(*rec.period.period));
  }

  ds.provenance.emplace_back("generator", "period");
  ds.provenance.emplace_back("map", describe(spec.base));
  ds.provenance.emplace_back("swept_param", spec.param);
  ds.provenance.emplace_back("range_lo", format_short(spec.range.lo));
  ds.provenance.emplace_back("range_hi", format_short(spec.range.hi));
  ds.provenance.emplace_back("points", std::to_string(spec.range.n));
  ds.provenance.emplace_back("seed", std::to_string(spec.seed));
  add_iteration(ds.provenance, local.iteration);
  ds.provenance.emplace_back("rows", std::to_string(keep.size()));
  ds.provenance.emplace_back("aperiodic_excluded", std::to_string(spec.range.n - keep.size() - diverged));
  ds.provenance.emplace_back("diverged_excluded", std::to_string(diverged));
  ds.provenance.emplace_back("empty", keep.empty() ? "true" : "false");
  return ds;
}

const char* family_name(ImageFamily family) noexcept {
  return family == ImageFamily::TentCobweb ? "cobweb" : "lozi";
}

// Covers the fixed point (2.5, 1.25) at a = -0.1 and the chaotic attractor near a = 1.7.
Window lozi_portrait_window() { return {-1.5, 2.75, -0.75, 1.5}; }

ImageDataset gen_image_dataset(const ImageDatasetConfig& cfg) {
  if (cfg.n_samples < 2) throw Error(ErrorCode::InvalidArgument, "image datasets need at least two samples");
  if (cfg.resolution < 16) throw Error(ErrorCode::InvalidArgument, "image resolution must be at least 16");

  ImageDataset out;
  out.family = cfg.family;
  out.images.resize(cfg.n_samples);
  out.labels.resize(cfg.n_samples);
  out.params.resize(cfg.n_samples);
  out.lambda1.resize(cfg.n_samples);
  std::vector<std::size_t> retries(cfg.n_samples, 0);

  parallel_for(cfg.n_samples, cfg.workers, [&](std::size_t i) {
    SplitMix64 rng = stream(cfg.seed, i);
    for (std::size_t attempt = 0;; ++attempt) {
      if (attempt == 1000) {
        throw Error(ErrorCode::NonFiniteState, "sample " + std::to_string(i) + " diverged 1000 times in a row");
      }
      try {
        if (cfg.family == ImageFamily::TentCobweb) {
          const double mu = rng.uniform(-1.5, 1.5);
          const MapInstance map(TentParams{mu});
          const State x0 = State::Constant(1, 0.1);
          const auto spectrum = lyapunov_spectrum(map, x0, cfg.iteration);
          out.images[i] = render_cobweb(map, 0.1, cfg.cobweb_steps, cfg.resolution);
          out.params[i] = mu;
          out.lambda1[i] = spectrum.largest();
        } else {
          const double a = rng.uniform(-0.1, 1.7);
          const MapInstance map(LoziParams{a, 0.5});
          State x0(2);
          x0 << rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5);
          const auto spectrum = lyapunov_spectrum(map, x0, cfg.iteration);
          const Orbit orbit =
              simulate(map, x0, cfg.iteration.transient + cfg.portrait_points, cfg.iteration.transient);
          out.images[i] = render_phase_portrait(orbit.states, lozi_portrait_window(), cfg.resolution).image;
          out.params[i] = a;
          out.lambda1[i] = spectrum.largest();
        }
        out.labels[i] = out.lambda1[i] > 0.0 ? 1 : 0;
        retries[i] = attempt;
        return;
      } catch (const NonFiniteStateError&) {
      }
    }
  });
  for (auto r : retries) out.resampled += r;

  out.provenance.emplace_back("generator", family_name(cfg.family));
  if (cfg.family == ImageFamily::TentCobweb) {
    out.provenance.emplace_back("map", "tent");
    out.provenance.emplace_back("param", "mu");
    out.provenance.emplace_back("range_lo", "-1.5");
    out.provenance.emplace_back("range_hi", "1.5");
    out.provenance.emplace_back("x0", "0.1");
    out.provenance.emplace_back("cobweb_steps", std::to_string(cfg.cobweb_steps));
  } else {
    out.provenance.emplace_back("map", "lozi b=0.5");
    out.provenance.emplace_back("param", "a");
    out.provenance.emplace_back("range_lo", "-0.1");
    out.provenance.emplace_back("range_hi", "1.7");
    out.provenance.emplace_back("x0", "uniform[-0.5,0.5]^2");
    out.provenance.emplace_back("portrait_points", std::to_string(cfg.portrait_points));
  }
  out.provenance.emplace_back("samples", std::to_string(cfg.n_samples));
  out.provenance.emplace_back("resolution", std::to_string(cfg.resolution));
  out.provenance.emplace_back("seed", std::to_string(cfg.seed));
  add_iteration(out.provenance, cfg.iteration);
  out.provenance.emplace_back("resampled", std::to_string(out.resampled));
  return out;
}

Dataset to_dataset(const ImageDataset& images) {
  Dataset ds;
  if (images.images.empty()) return ds;
  const auto& first = images.images.front();
  const auto width = static_cast<Eigen::Index>(first.width * first.height);
  ds.features.resize(static_cast<Eigen::Index>(images.images.size()), width);
  for (std::size_t i = 0; i < images.images.size(); ++i) {
    const auto& img = images.images[i];
    if (static_cast<Eigen::Index>(img.pixels.size()) != width) {
      throw Error(ErrorCode::ShapeMismatch, "images in a dataset must share one size");
    }
    for (Eigen::Index p = 0; p < width; ++p) {
      ds.features(static_cast<Eigen::Index>(i), p) = (255.0 - img.pixels[static_cast<std::size_t>(p)]) / 255.0;
    }
  }
  ds.labels = images.labels;
  ds.label_names = {"regular", "chaotic"};
  ds.provenance = images.provenance;
  ds.provenance.emplace_back("image_height", std::to_string(first.height));
  ds.provenance.emplace_back("image_width", std::to_string(first.width));
  return ds;
}

OrbitFeatureDataset gen_orbit_feature_dataset(const OrbitDatasetConfig& cfg) {
  if (cfg.window < 1) throw Error(ErrorCode::InvalidArgument, "window must be at least 1");
  if (!(cfg.delta_r_lo < cfg.delta_r_hi)) throw Error(ErrorCode::InvalidArgument, "delta_r range needs lo < hi");

  struct Sample {
    bool ok = false;
    double delta_r = 0.0;
    std::vector<double> features;
    int label = 0;
  };
  std::vector<Sample> samples(cfg.n_samples);
  parallel_for(cfg.n_samples, cfg.workers, [&](std::size_t i) {
    SplitMix64 rng = stream(cfg.seed, i);
    Sample& s = samples[i];
    s.delta_r = rng.uniform(cfg.delta_r_lo, cfg.delta_r_hi);
    Pws3DParams p = cfg.base;
    p.delta_r = s.delta_r;
    const MapInstance map(p);
    State x0(3);
    x0 << rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5);
    try {
      const Orbit orbit = simulate(map, x0, cfg.iteration.transient + cfg.window, cfg.iteration.transient);
      s.features.reserve(cfg.window * 3);
      for (const auto& st : orbit.states) {
        for (int d = 0; d < 3; ++d) s.features.push_back(st[d]);
      }
      s.label = static_cast<int>(classify_behavior(lyapunov_spectrum(map, x0, cfg.iteration)));
      s.ok = true;
    } catch (const NonFiniteStateError&) {
      s.ok = false;
    }
  });

  OrbitFeatureDataset out;
  std::size_t kept = 0;
  for (const auto& s : samples) kept += s.ok ? 1 : 0;
  out.excluded = cfg.n_samples - kept;
  Dataset& ds = out.data;
  ds.features.resize(static_cast<Eigen::Index>(kept), static_cast<Eigen::Index>(3 * cfg.window));
  std::size_t r = 0;
  for (const auto& s : samples) {
    if (!s.ok) continue;
    for (std::size_t c = 0; c < s.features.size(); ++c) {
      ds.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = s.features[c];
    }
    ds.labels.push_back(s.label);
    out.delta_r.push_back(s.delta_r);
    ++r;
  }
  for (std::size_t t = 0; t < cfg.window; ++t) {
    for (int d = 0; d < 3; ++d) ds.column_names.push_back(std::string(kStateNames[d]) + "_" + std::to_string(t));
  }
  ds.label_names = {"regular", "chaotic", "hyperchaotic"};

  ds.provenance.emplace_back("generator", "pws3d");
  ds.provenance.emplace_back("map", describe(MapInstance(cfg.base)));
  ds.provenance.emplace_back("swept_param", "delta_r");
  ds.provenance.emplace_back("range_lo", format_short(cfg.delta_r_lo));
  ds.provenance.emplace_back("range_hi", format_short(cfg.delta_r_hi));
  ds.provenance.emplace_back("samples", std::to_string(cfg.n_samples));
  ds.provenance.emplace_back("window", std::to_string(cfg.window));
  ds.provenance.emplace_back("seed", std::to_string(cfg.seed));
  add_iteration(ds.provenance, cfg.iteration);
  ds.provenance.emplace_back("excluded", std::to_string(out.excluded));
  return out;
}

}  // namespace pwsml
