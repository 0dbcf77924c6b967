#pragma once

#include "pwsml/maps.hpp"

#include <cstddef>
#include <optional>
#include <vector>

namespace pwsml {

/// Iteration knobs shared by orbit, period and Lyapunov computations.
struct IterationConfig {
  std::size_t transient = 5000;
  std::size_t iterations = 10000;
  double period_tol = 1e-9;
  std::size_t max_period = 32;

  /// Longer transient and looser tolerance for border-collision scans, where
  /// multipliers close to -1 or +1 make convergence to the cycle slow.
  static IterationConfig bcb_scan() {
    IterationConfig cfg;
    cfg.transient = 10000;
    cfg.period_tol = 1e-6;
    return cfg;
  }
};

struct Orbit {
  std::vector<State> states;
  std::size_t transient_discarded = 0;
  MapInstance map;
};

/// Iterates n_total steps from x0 and keeps the last n_total - n_transient
/// images. Throws NonFiniteStateError carrying the failing step index.
Orbit simulate(const MapInstance& map, const State& x0, std::size_t n_total, std::size_t n_transient);

struct NormalFormFixedPoints {
  double x_left = 0.0;
  double x_right = 0.0;
  bool admissible_left = false;
  bool admissible_right = false;
};

/// x_L* = mu / (1 - a), x_R* = (mu + l) / (1 - b). Throws DegenerateSlope when
/// a or b equals one.
NormalFormFixedPoints fixed_points_normal_form(const NormalForm1DParams& params);

struct PeriodResult {
  std::optional<std::size_t> period;
  std::vector<State> cycle_points;
};

/// Smallest p <= max_period whose sup-norm return distance at the
/// post-transient point is below tol; nullopt when none qualifies.
PeriodResult detect_period(const MapInstance& map, const State& x0, std::size_t max_period, double tol,
                           std::size_t transient);

inline PeriodResult detect_period(const MapInstance& map, const State& x0, const IterationConfig& cfg = {}) {
  return detect_period(map, x0, cfg.max_period, cfg.period_tol, cfg.transient);
}

/// Stand-in for log(0) when a branch derivative vanishes.
inline constexpr double kLogZeroSentinel = -1.0e10;

struct LyapunovSpectrum {
  std::vector<double> exponents;  // descending
  std::size_t n_iterations = 0;
  std::size_t left_visits = 0;
  std::size_t right_visits = 0;
  bool degenerate = false;  // some exponent hit kLogZeroSentinel

  double largest() const { return exponents.front(); }
};

/// One-dimensional maps average log|f'| along the orbit; higher dimensions use
/// a QR re-orthonormalised tangent frame, refactored every step.
LyapunovSpectrum lyapunov_spectrum(const MapInstance& map, const State& x0, std::size_t n, std::size_t n_transient);

inline LyapunovSpectrum lyapunov_spectrum(const MapInstance& map, const State& x0, const IterationConfig& cfg = {}) {
  return lyapunov_spectrum(map, x0, cfg.iterations, cfg.transient);
}

enum class BehaviorLabel : int { Regular = 0, Chaotic = 1, Hyperchaotic = 2 };

const char* label_name(BehaviorLabel label) noexcept;

/// Number of strictly positive exponents: 0 regular, 1 chaotic, 2+ hyperchaotic.
BehaviorLabel classify_behavior(const LyapunovSpectrum& spectrum) noexcept;
BehaviorLabel classify_behavior(const std::vector<double>& exponents) noexcept;

}  // namespace pwsml
