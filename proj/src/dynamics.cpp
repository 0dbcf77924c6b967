#include "pwsml/dynamics.hpp"

#include "pwsml/error.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

namespace pwsml {

namespace {

void check_input(const MapInstance& map, const State& x0) {
  if (x0.size() != map.dim()) {
    throw Error(ErrorCode::ShapeMismatch, "initial state has " + std::to_string(x0.size()) + " components, map expects " +
                                              std::to_string(map.dim()));
  }
  if (!is_finite(x0)) throw NonFiniteStateError(0, "NonFiniteState: initial state is not finite");
}

[[noreturn]] void diverged(std::size_t iteration) {
  throw NonFiniteStateError(iteration, "NonFiniteState: orbit diverged at iteration " + std::to_string(iteration));
}

// Advances `x` in place by `count` steps; `done` tracks the global step index.
void advance(const MapInstance& map, State& x, std::size_t count, std::size_t& done) {
  State next;
  for (std::size_t k = 0; k < count; ++k) {
    detail::step_raw(map, x, next);
    ++done;
    if (!is_finite(next)) diverged(done);
    x = next;
  }
}

double sup_distance(const State& a, const State& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace

Orbit simulate(const MapInstance& map, const State& x0, std::size_t n_total, std::size_t n_transient) {
  check_input(map, x0);
  if (n_total <= n_transient) {
    throw Error(ErrorCode::InvalidArgument, "simulate requires n_total > n_transient");
  }
  Orbit orbit{{}, n_transient, map};
  orbit.states.reserve(n_total - n_transient);
  State x = x0;
  std::size_t done = 0;
  advance(map, x, n_transient, done);
  State next;
  for (std::size_t k = n_transient; k < n_total; ++k) {
    detail::step_raw(map, x, next);
    ++done;
    if (!is_finite(next)) diverged(done);
    x = next;
    orbit.states.push_back(x);
  }
  return orbit;
}

NormalFormFixedPoints fixed_points_normal_form(const NormalForm1DParams& p) {
  if (p.a == 1.0 || p.b == 1.0) {
    throw Error(ErrorCode::DegenerateSlope, "DegenerateSlope: fixed points need a != 1 and b != 1");
  }
  NormalFormFixedPoints out;
  out.x_left = p.mu / (1.0 - p.a);
  out.x_right = (p.mu + p.l) / (1.0 - p.b);
  out.admissible_left = out.x_left <= 0.0;
  out.admissible_right = out.x_right > 0.0;
  return out;
}

PeriodResult detect_period(const MapInstance& map, const State& x0, std::size_t max_period, double tol,
                           std::size_t transient) {
  check_input(map, x0);
  if (max_period < 1) throw Error(ErrorCode::InvalidArgument, "max_period must be >= 1");
  if (!(tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "period tolerance must be positive");

  State x = x0;
  std::size_t done = 0;
  advance(map, x, transient, done);

  PeriodResult result;
  std::vector<State> images;
  images.reserve(max_period + 1);
  images.push_back(x);
  State y = x;
  for (std::size_t p = 1; p <= max_period; ++p) {
    advance(map, y, 1, done);
    if (sup_distance(y, x) < tol) {
      result.period = p;
      result.cycle_points = std::move(images);
      return result;
    }
    images.push_back(y);
  }
  return result;
}

LyapunovSpectrum lyapunov_spectrum(const MapInstance& map, const State& x0, std::size_t n, std::size_t n_transient) {
  check_input(map, x0);
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "lyapunov_spectrum needs at least one iteration");

  State x = x0;
  std::size_t done = 0;
  advance(map, x, n_transient, done);

  const int dim = map.dim();
  LyapunovSpectrum out;
  out.n_iterations = n;
  std::vector<double> sums(static_cast<std::size_t>(dim), 0.0);
  std::vector<bool> hit_zero(static_cast<std::size_t>(dim), false);

  Jacobian j;
  State next;
  if (dim == 1) {
    for (std::size_t k = 0; k < n; ++k) {
      if (detail::branch_raw(map, x) == Branch::Left) {
        ++out.left_visits;
      } else {
        ++out.right_visits;
      }
      detail::jacobian_raw(map, x, j);
      const double slope = std::abs(j(0, 0));
      if (slope == 0.0) {
        hit_zero[0] = true;
      } else {
        sums[0] += std::log(slope);
      }
      detail::step_raw(map, x, next);
      ++done;
      if (!is_finite(next)) diverged(done);
      x = next;
    }
  } else {
    Jacobian frame = Jacobian::Identity(dim, dim);
    Jacobian product(dim, dim);
    Eigen::HouseholderQR<Jacobian> qr(dim, dim);
    for (std::size_t k = 0; k < n; ++k) {
      if (detail::branch_raw(map, x) == Branch::Left) {
        ++out.left_visits;
      } else {
        ++out.right_visits;
      }
      detail::jacobian_raw(map, x, j);
      product.noalias() = j * frame;
      qr.compute(product);
      const auto& r = qr.matrixQR();
      for (int i = 0; i < dim; ++i) {
        const double diag = std::abs(r(i, i));
        if (diag == 0.0) {
          hit_zero[static_cast<std::size_t>(i)] = true;
        } else {
          sums[static_cast<std::size_t>(i)] += std::log(diag);
        }
      }
      frame = qr.householderQ() * Jacobian::Identity(dim, dim);
      detail::step_raw(map, x, next);
      ++done;
      if (!is_finite(next)) diverged(done);
      x = next;
    }
  }

  out.exponents.resize(static_cast<std::size_t>(dim));
  for (std::size_t i = 0; i < sums.size(); ++i) {
    if (hit_zero[i]) {
      out.exponents[i] = kLogZeroSentinel;
      out.degenerate = true;
    } else {
      out.exponents[i] = sums[i] / static_cast<double>(n);
    }
  }
  std::sort(out.exponents.begin(), out.exponents.end(), std::greater<>());
  return out;
}

const char* label_name(BehaviorLabel label) noexcept {
  switch (label) {
    case BehaviorLabel::Regular:
      return "regular";
    case BehaviorLabel::Chaotic:
      return "chaotic";
    case BehaviorLabel::Hyperchaotic:
      return "hyperchaotic";
  }
  return "unknown";
}

BehaviorLabel classify_behavior(const std::vector<double>& exponents) noexcept {
  const auto positives = std::count_if(exponents.begin(), exponents.end(), [](double v) { return v > 0.0; });
  if (positives == 0) return BehaviorLabel::Regular;
  if (positives == 1) return BehaviorLabel::Chaotic;
  return BehaviorLabel::Hyperchaotic;
}

BehaviorLabel classify_behavior(const LyapunovSpectrum& spectrum) noexcept {
  return classify_behavior(spectrum.exponents);
}

}  // namespace pwsml
