#pragma once

#include "pwsml/dynamics.hpp"
#include "pwsml/maps.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace pwsml {

/// Inclusive, evenly spaced grid: at(0) == lo, at(n - 1) == hi.
struct AxisSpec {
  double lo = 0.0;
  double hi = 1.0;
  std::size_t n = 2;

  double at(std::size_t i) const noexcept;
  void validate(const char* what) const;
};

enum class X0Mode { Fixed, SeededRandom };

/// How each grid point picks its initial state.
struct X0Policy {
  X0Mode mode = X0Mode::Fixed;
  State fixed;
  double lo = -0.5;
  double hi = 0.5;

  /// 0.1 for one-dimensional maps, uniform in [-0.5, 0.5]^dim otherwise.
  static X0Policy default_for(const MapInstance& map);
  State initial(int dim, std::uint64_t seed, std::uint64_t index) const;
};

struct SweepSpec {
  MapInstance base;
  std::string param;
  AxisSpec range;
  X0Policy x0;
  std::uint64_t seed = 0;
  IterationConfig iteration;
  bool with_lyapunov = false;
  std::size_t attractor_samples = 64;
  std::size_t workers = 1;

  SweepSpec(MapInstance map, std::string swept, AxisSpec axis)
      : base(std::move(map)), param(std::move(swept)), range(axis), x0(X0Policy::default_for(base)) {}
};

struct ScanRecord {
  double param = 0.0;
  std::vector<State> attractor;
  PeriodResult period;
  std::optional<LyapunovSpectrum> spectrum;
  std::optional<BehaviorLabel> label;
  bool diverged = false;
  std::string note;
};

struct BifurcationScan {
  std::vector<ScanRecord> records;
};

BifurcationScan sweep_1p(const SweepSpec& spec);

std::vector<std::pair<double, std::optional<std::size_t>>> period_vs_param(const SweepSpec& spec,
                                                                          std::size_t max_period);

struct BcbEvent {
  double param_star = 0.0;
  /// Last grid value on the side where the target period was detected.
  double grid_param = 0.0;
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
  std::optional<std::size_t> period_before;
  std::optional<std::size_t> period_after;
  double border_point_residual = 0.0;
  bool refined = false;
  std::string branch_sequence;
};

inline constexpr double kBorderResidualTol = 1e-9;

/// Grid bracketing of changes in the target-period status, then bisection on
/// the signed border distance of the continued cycle point nearest the border.
std::vector<BcbEvent> detect_bcb(const SweepSpec& spec, std::size_t target_period, double tol_param);

/// Periodic orbit of a piecewise-affine map with the given branch itinerary,
/// solved exactly from the composed affine map. `finite` is false when the
/// composed linear part has 1 as an eigenvalue.
struct CycleSolution {
  std::vector<State> points;
  bool finite = false;
};

CycleSolution solve_cycle(const MapInstance& map, const std::vector<Branch>& itinerary);

enum class ChartSource { GroundTruth, Predicted };

/// Label matrix over (tau_L, tau_R). Row r is tau_r.at(r), column c is
/// tau_l.at(c); storage is row-major.
struct ChartGrid {
  AxisSpec tau_l;
  AxisSpec tau_r;
  std::vector<int> labels;
  std::vector<std::uint8_t> diverged;
  std::vector<double> lambda1;
  ChartSource source = ChartSource::GroundTruth;

  std::size_t rows() const noexcept { return tau_r.n; }
  std::size_t cols() const noexcept { return tau_l.n; }
  std::size_t index(std::size_t r, std::size_t c) const noexcept { return r * tau_l.n + c; }
};

/// Two-class behaviour chart of the 2D border-collision normal form.
/// Hyperchaotic cells are folded into Chaotic. Diverging cells are flagged and
/// carry label 0.
ChartGrid chart_2p(const AxisSpec& tau_l, const AxisSpec& tau_r, const Bcb2DParams& params,
                   const IterationConfig& cfg = {}, std::uint64_t seed = 0, std::size_t workers = 1);

}  // namespace pwsml
