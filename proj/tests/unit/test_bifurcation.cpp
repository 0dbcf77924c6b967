#include "doctest.h"
#include "oracles.hpp"

#include "pwsml/bifurcation.hpp"
#include "pwsml/error.hpp"

#include <cmath>
#include <set>

using namespace pwsml;

namespace {

SweepSpec normal_form_sweep(std::size_t n) {
  return SweepSpec(MapInstance(NormalForm1DParams{0.5, 0.5, -0.1, 0.0}), "mu", AxisSpec{-0.1, 0.2, n});
}

SweepSpec tent_sweep(double lo, double hi, std::size_t n) {
  return SweepSpec(MapInstance(TentParams{}), "mu", AxisSpec{lo, hi, n});
}

bool same_scan(const BifurcationScan& a, const BifurcationScan& b) {
  if (a.records.size() != b.records.size()) return false;
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    const auto& x = a.records[i];
    const auto& y = b.records[i];
    if (x.param != y.param || x.diverged != y.diverged || x.period.period != y.period.period) return false;
    if (x.attractor.size() != y.attractor.size()) return false;
    for (std::size_t k = 0; k < x.attractor.size(); ++k) {
      if (x.attractor[k] != y.attractor[k]) return false;
    }
    if (x.spectrum.has_value() != y.spectrum.has_value()) return false;
    if (x.spectrum && x.spectrum->exponents != y.spectrum->exponents) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("axis spec") {
  const AxisSpec ax{-1.0, 3.0, 5};
  CHECK(ax.at(0) == -1.0);
  CHECK(ax.at(4) == 3.0);
  CHECK(ax.at(2) == doctest::Approx(1.0));
  CHECK_THROWS_AS((AxisSpec{1.0, 1.0, 5}.validate("x")), Error);
  CHECK_THROWS_AS((AxisSpec{0.0, 1.0, 1}.validate("x")), Error);
}

TEST_CASE("sweep: negative mu sits on the left fixed point") {
  SweepSpec spec = normal_form_sweep(301);
  const auto scan = sweep_1p(spec);
  REQUIRE(scan.records.size() == 301);
  std::size_t negatives = 0;
  for (const auto& rec : scan.records) {
    if (rec.param >= 0.0) continue;
    ++negatives;
    REQUIRE(rec.period.period);
    CHECK(*rec.period.period == 1);
    CHECK(rec.attractor.back()[0] == doctest::Approx(rec.param / 0.5).epsilon(1e-9));
  }
  CHECK(negatives == 100);
}

TEST_CASE("sweep: two grid points give two records") {
  SweepSpec spec = normal_form_sweep(2);
  CHECK(sweep_1p(spec).records.size() == 2);
  spec.range.n = 1;
  CHECK_THROWS_AS(sweep_1p(spec), Error);
  SweepSpec bad = normal_form_sweep(10);
  bad.param = "tau_l";
  CHECK_THROWS_AS(sweep_1p(bad), Error);
}

TEST_CASE("sweep: tent regular inside |mu| < 1, chaotic outside") {
  SweepSpec spec = tent_sweep(-1.5, 1.5, 200);
  spec.with_lyapunov = true;
  const auto scan = sweep_1p(spec);
  std::size_t labelled = 0;
  for (const auto& rec : scan.records) {
    if (rec.diverged) continue;
    REQUIRE(rec.label);
    ++labelled;
    if (std::abs(rec.param) < 1.0) CHECK(*rec.label == BehaviorLabel::Regular);
    if (std::abs(rec.param) > 1.0) CHECK(*rec.label == BehaviorLabel::Chaotic);
  }
  CHECK(labelled == 200);
}

TEST_CASE("period_vs_param") {
  const auto nf = period_vs_param(normal_form_sweep(1000), 32);
  std::size_t i = 0;
  while (nf[i].first <= 1e-12) ++i;
  CHECK(nf[i].second == std::optional<std::size_t>(9));

  const auto tent = period_vs_param(tent_sweep(-0.999, 0.999, 500), 32);
  const std::set<std::size_t> allowed{1, 2, 4, 8, 16};
  for (const auto& [mu, p] : tent) {
    if (p) CHECK(allowed.count(*p) == 1);
  }

  // a = b = l = 0: the map is the constant mu, period 1 everywhere
  SweepSpec flat(MapInstance(NormalForm1DParams{0.0, 0.0, 0.0, 0.0}), "mu", AxisSpec{-1.0, 1.0, 50});
  for (const auto& [mu, p] : period_vs_param(flat, 8)) CHECK(p == std::optional<std::size_t>(1));
}

TEST_CASE("property: sweeps are ordered and reproducible") {
  SweepSpec spec(MapInstance(LoziParams{}), "a", AxisSpec{1.0, 1.7, 40});
  spec.with_lyapunov = true;
  spec.seed = 17;
  const auto a = sweep_1p(spec);
  for (std::size_t i = 1; i < a.records.size(); ++i) CHECK(a.records[i].param > a.records[i - 1].param);
  CHECK(same_scan(a, sweep_1p(spec)));
  spec.workers = 4;
  CHECK(same_scan(a, sweep_1p(spec)));
}

TEST_CASE("solve_cycle matches direct iteration") {
  const MapInstance m(NormalForm1DParams{0.5, 0.5, -0.1, 0.05});
  const CycleSolution fixed = solve_cycle(m, {Branch::Left});
  REQUIRE(fixed.finite);
  CHECK(fixed.points[0][0] == doctest::Approx(0.1));  // mu / (1 - a), inadmissible but finite

  const CycleSolution two = solve_cycle(m, {Branch::Left, Branch::Right});
  REQUIRE(two.finite);
  const double x0 = two.points[0][0];
  const double x1 = 0.5 * x0 + 0.05;
  const double x2 = 0.5 * x1 + 0.05 - 0.1;
  CHECK(two.points[1][0] == doctest::Approx(x1));
  CHECK(x2 == doctest::Approx(x0));

  CHECK_FALSE(solve_cycle(MapInstance(NormalForm1DParams{1.0, 1.0, 0.0, 0.1}), {Branch::Left}).finite);
}

TEST_CASE("detect_bcb: normal form collisions at the closed-form roots") {
  SweepSpec spec = normal_form_sweep(1000);
  spec.iteration = IterationConfig::bcb_scan();
  const double tol = 1e-12;
  const auto events = detect_bcb(spec, 1, tol);
  REQUIRE(events.size() == 2);
  // x_L*(mu) = mu / (1 - a) = 0 and x_R*(mu) = (mu + l) / (1 - b) = 0
  CHECK(std::abs(events[0].param_star - 0.0) < 1e-6);
  CHECK(std::abs(events[1].param_star - 0.1) < 1e-6);
  for (const auto& ev : events) {
    CHECK(ev.refined);
    CHECK(ev.border_point_residual < kBorderResidualTol);
    CHECK(ev.bracket_hi - ev.bracket_lo <= 2 * tol + 1e-15);
  }
  CHECK(events[0].period_before == std::optional<std::size_t>(1));
}

TEST_CASE("detect_bcb: tent period-1 boundaries") {
  SweepSpec spec = tent_sweep(-1.5, 1.5, 1000);
  spec.iteration = IterationConfig::bcb_scan();
  const auto events = detect_bcb(spec, 1, 1e-12);
  REQUIRE(events.size() == 2);
  CHECK(std::abs(events[0].param_star + 1.0) < 2e-3);
  CHECK(std::abs(events[1].param_star - 1.0) < 2e-3);
  CHECK(events[0].grid_param == doctest::Approx(-0.9984984984984985).epsilon(1e-12));
  CHECK(events[1].grid_param == doctest::Approx(0.9984984984984985).epsilon(1e-12));
}

TEST_CASE("property: refined events sit on the border") {
  for (double l : {-0.1, -0.2, -0.05}) {
    SweepSpec spec(MapInstance(NormalForm1DParams{0.5, 0.5, l, 0.0}), "mu", AxisSpec{-0.1, 0.3, 400});
    spec.iteration = IterationConfig::bcb_scan();
    for (const auto& ev : detect_bcb(spec, 1, 1e-12)) {
      if (ev.refined) CHECK(ev.border_point_residual < 1e-9);
    }
  }
  CHECK_THROWS_AS(detect_bcb(normal_form_sweep(10), 0, 1e-12), Error);
  CHECK_THROWS_AS(detect_bcb(normal_form_sweep(10), 1, 0.0), Error);
}

TEST_CASE("detect_bcb without events is empty") {
  SweepSpec spec = normal_form_sweep(50);
  spec.range = AxisSpec{-0.1, -0.05, 50};
  CHECK(detect_bcb(spec, 1, 1e-12).empty());
}

TEST_CASE("chart: shape and oracle agreement") {
  const AxisSpec tl{-1.0, 3.0, 10};
  const AxisSpec tr{-0.2, 1.0, 10};
  const Bcb2DParams params;
  IterationConfig cfg;
  cfg.transient = 1000;
  cfg.iterations = 3000;
  const ChartGrid g = chart_2p(tl, tr, params, cfg, 3);
  REQUIRE(g.labels.size() == 100);
  CHECK(g.rows() == 10);
  CHECK(g.cols() == 10);

  X0Policy policy;
  policy.mode = X0Mode::SeededRandom;
  for (std::size_t r = 0; r < g.rows(); ++r) {
    for (std::size_t c = 0; c < g.cols(); ++c) {
      const std::size_t idx = g.index(r, c);
      const State x0 = policy.initial(2, 3, idx);
      const auto want = oracle::chart_label(tl.at(c), tr.at(r), params.delta_l, params.delta_r, params.mu,
                                            {x0[0], x0[1]}, cfg.transient, cfg.iterations);
      CHECK(static_cast<bool>(g.diverged[idx]) == !want.has_value());
      if (want) CHECK(g.labels[idx] == *want);
    }
  }
}

TEST_CASE("property: chart is invariant to the worker count") {
  const AxisSpec tl{-1.0, 3.0, 12};
  const AxisSpec tr{-0.2, 1.0, 9};
  IterationConfig cfg;
  cfg.transient = 500;
  cfg.iterations = 1000;
  const ChartGrid a = chart_2p(tl, tr, {}, cfg, 5, 1);
  const ChartGrid b = chart_2p(tl, tr, {}, cfg, 5, 6);
  CHECK(a.labels == b.labels);
  CHECK(a.diverged == b.diverged);
  for (std::size_t i = 0; i < a.lambda1.size(); ++i) {
    CHECK((a.lambda1[i] == b.lambda1[i] || (std::isnan(a.lambda1[i]) && std::isnan(b.lambda1[i]))));
  }
}
