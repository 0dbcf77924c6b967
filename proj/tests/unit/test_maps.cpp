#include "doctest.h"
#include "oracles.hpp"

#include "pwsml/error.hpp"
#include "pwsml/maps.hpp"
#include "pwsml/rng.hpp"

#include <Eigen/LU>

#include <cmath>
#include <initializer_list>
#include <limits>

using namespace pwsml;

namespace {

State st(std::initializer_list<double> v) {
  State s(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) s[i++] = x;
  return s;
}

MapInstance all_maps(int k) {
  switch (k) {
    case 0: return MapInstance(NormalForm1DParams{});
    case 1: return MapInstance(TentParams{});
    case 2: return MapInstance(LoziParams{});
    case 3: return MapInstance(Pws3DParams{});
    default: return MapInstance(Bcb2DParams{});
  }
}

State random_state(SplitMix64& rng, int dim, double span) {
  State s(dim);
  for (int i = 0; i < dim; ++i) s[i] = rng.uniform(-span, span);
  return s;
}

}  // namespace

TEST_CASE("dimensions and names") {
  CHECK(all_maps(0).dim() == 1);
  CHECK(all_maps(1).dim() == 1);
  CHECK(all_maps(2).dim() == 2);
  CHECK(all_maps(3).dim() == 3);
  CHECK(all_maps(4).dim() == 2);
  CHECK(parse_kind("normal-form") == MapKind::NormalForm1D);
  CHECK(parse_kind("pws3d") == MapKind::Pws3D);
  CHECK(parse_kind("bcb2d") == MapKind::Bcb2D);
  CHECK_THROWS_AS(parse_kind("logistic"), Error);
  CHECK(describe(MapInstance(TentParams{1.5})) == "tent mu=1.5");
}

TEST_CASE("border distance") {
  CHECK(border_distance(MapInstance(TentParams{}), st({0.5})) == 0.0);
  CHECK(border_distance(MapInstance(NormalForm1DParams{}), st({-0.2})) == -0.2);
  CHECK(border_distance(MapInstance(LoziParams{}), st({0.3, -1.0})) == 0.3);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(border_distance(MapInstance(TentParams{}), st({nan})), NonFiniteStateError);
  CHECK_THROWS_AS(border_distance(MapInstance(LoziParams{}), st({0.0, INFINITY})), NonFiniteStateError);
}

TEST_CASE("branch index is left-closed") {
  const MapInstance tent(TentParams{});
  CHECK(branch_index(tent, st({0.25})) == Branch::Left);
  CHECK(branch_index(tent, st({0.5})) == Branch::Left);
  CHECK(branch_index(tent, st({0.5000001})) == Branch::Right);
  CHECK(branch_index(MapInstance(Pws3DParams{}), st({-0.1, 5, 5})) == Branch::Left);
  CHECK(branch_index(MapInstance(Bcb2DParams{}), st({0.0, 1.0})) == Branch::Left);
}

TEST_CASE("single steps") {
  CHECK(step(MapInstance(NormalForm1DParams{0.5, 0.5, -0.1, 0.1}), st({-0.2}))[0] == doctest::Approx(0.0));
  const State lz = step(MapInstance(LoziParams{1.68, 0.5}), st({0.0, 0.0}));
  CHECK(lz[0] == 1.0);
  CHECK(lz[1] == 0.0);
  const State p3 = step(MapInstance(Pws3DParams{}), st({0, 0, 0}));
  CHECK(p3[0] == doctest::Approx(0.1));
  CHECK(p3[1] == 0.0);
  CHECK(p3[2] == 0.0);
  const State b2 = step(MapInstance(Bcb2DParams{}), st({0, 0}));
  CHECK(b2[0] == -1.0);
  CHECK(b2[1] == 0.0);
}

TEST_CASE("step overflow is reported") {
  const MapInstance nf(NormalForm1DParams{0.5, 1e308, 0.0, 0.0});
  CHECK_THROWS_AS(step(nf, st({10.0})), NonFiniteStateError);
  CHECK_THROWS_AS(step(nf, st({std::numeric_limits<double>::quiet_NaN()})), NonFiniteStateError);
}

TEST_CASE("jacobians") {
  CHECK(jacobian(MapInstance(TentParams{1.5}), st({0.75}))(0, 0) == -1.5);
  CHECK(jacobian(MapInstance(TentParams{1.5}), st({0.25}))(0, 0) == 1.5);
  const Jacobian lz = jacobian(MapInstance(LoziParams{1.68, 0.5}), st({0.4, 0.0}));
  CHECK(lz(0, 0) == -1.68);
  CHECK(lz(0, 1) == 1.0);
  CHECK(lz(1, 0) == 0.5);
  CHECK(lz(1, 1) == 0.0);
  // sgn(0) = -1 under the left-closed rule
  CHECK(jacobian(MapInstance(LoziParams{1.68, 0.5}), st({0.0, 0.0}))(0, 0) == 1.68);

  Pws3DParams p;
  const Jacobian ar = jacobian(MapInstance(p), st({1, 0, 0}));
  Eigen::Matrix3d expect;
  expect << p.tau_r, 1, 0, -p.sigma_r, 0, 1, p.delta_r, 0, 0;
  CHECK((ar - expect).cwiseAbs().maxCoeff() == 0.0);
  const Jacobian al = jacobian(MapInstance(p), st({-1, 0, 0}));
  expect << p.tau_l, 1, 0, -p.sigma_l, 0, 1, p.delta_l, 0, 0;
  CHECK((al - expect).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("parameter access") {
  const MapInstance m(Pws3DParams{});
  CHECK(parameter_names(MapKind::Pws3D).size() == 7);
  CHECK(get_parameter(m, "delta_r") == -1.0);
  const MapInstance m2 = with_parameter(m, "delta_r", -0.9);
  CHECK(get_parameter(m2, "delta_r") == -0.9);
  CHECK(get_parameter(m, "delta_r") == -1.0);
  CHECK_THROWS_AS(get_parameter(m, "a"), Error);
  CHECK_THROWS_AS(with_parameter(m, "mu", std::numeric_limits<double>::infinity()), Error);
}

TEST_CASE("property: step matches the direct branch formula") {
  SplitMix64 rng(11);
  for (int trial = 0; trial < 2000; ++trial) {
    const double a = rng.uniform(-2, 2), b = rng.uniform(-2, 2), l = rng.uniform(-1, 1), mu = rng.uniform(-1, 1);
    const double x = rng.uniform(-3, 3);
    CHECK(step(MapInstance(NormalForm1DParams{a, b, l, mu}), st({x}))[0] == oracle::nf_step(a, b, l, mu, x));
    const double tm = rng.uniform(-2, 2);
    CHECK(step(MapInstance(TentParams{tm}), st({x}))[0] == oracle::tent_step(tm, x));

    const oracle::V2 s2{rng.uniform(-2, 2), rng.uniform(-2, 2)};
    const State lz = step(MapInstance(LoziParams{a, b}), st({s2[0], s2[1]}));
    const oracle::V2 lo = oracle::lozi_step(a, b, s2);
    CHECK(lz[0] == lo[0]);
    CHECK(lz[1] == lo[1]);

    const Bcb2DParams bp{rng.uniform(-2, 3), rng.uniform(-1, 1), rng.uniform(-2, 2), rng.uniform(-1, 1), mu};
    const State bb = step(MapInstance(bp), st({s2[0], s2[1]}));
    const oracle::V2 bo = oracle::bcb2d_step(bp.tau_l, bp.tau_r, bp.delta_l, bp.delta_r, bp.mu, s2);
    CHECK(bb[0] == bo[0]);
    CHECK(bb[1] == bo[1]);

    oracle::Pws3 op;
    op.mu = mu;
    op.dr = rng.uniform(-1.1, -0.8);
    Pws3DParams pp;
    pp.mu = mu;
    pp.delta_r = op.dr;
    const oracle::V3 s3{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)};
    const State p3 = step(MapInstance(pp), st({s3[0], s3[1], s3[2]}));
    const oracle::V3 o3 = oracle::pws3_step(op, s3);
    CHECK(p3[0] == o3[0]);
    CHECK(p3[1] == o3[1]);
    CHECK(p3[2] == o3[2]);
  }
}

TEST_CASE("property: affine branches reproduce step") {
  SplitMix64 rng(5);
  for (int k = 0; k < 5; ++k) {
    const MapInstance m = all_maps(k);
    for (int trial = 0; trial < 200; ++trial) {
      const State s = random_state(rng, m.dim(), 2.0);
      const AffineBranch br = affine_branch(m, branch_index(m, s));
      const State via = br.jacobian * s + br.offset;
      CHECK((via - step(m, s)).cwiseAbs().maxCoeff() < 1e-14);
      CHECK((br.jacobian - jacobian(m, s)).cwiseAbs().maxCoeff() == 0.0);
    }
  }
}

TEST_CASE("property: tent is continuous at the border") {
  for (double mu : {-1.5, -0.7, 0.3, 1.0, 1.5}) {
    const MapInstance m(TentParams{mu});
    for (double eps : {1e-2, 1e-4, 1e-6, 1e-8}) {
      const double gap = std::abs(step(m, st({0.5 - eps}))[0] - step(m, st({0.5 + eps}))[0]);
      CHECK(gap <= 2.0 * std::abs(mu) * eps + 1e-15);
    }
    CHECK(step(m, st({0.5}))[0] == doctest::Approx(mu / 2));
  }
}

TEST_CASE("property: Lozi determinant is -b") {
  SplitMix64 rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    const double a = rng.uniform(-2, 2), b = rng.uniform(-1, 1);
    const State s = random_state(rng, 2, 3.0);
    CHECK(jacobian(MapInstance(LoziParams{a, b}), s).determinant() == doctest::Approx(-b).epsilon(1e-12));
  }
}

TEST_CASE("property: Pws3D determinant is delta on each side") {
  SplitMix64 rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    Pws3DParams p{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1),
                  rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1), 0.1};
    const MapInstance m(p);
    // cofactor expansion along the last column: det = delta
    const Jacobian al = affine_branch(m, Branch::Left).jacobian;
    const Jacobian ar = affine_branch(m, Branch::Right).jacobian;
    CHECK(al.determinant() == doctest::Approx(p.delta_l).epsilon(1e-12));
    CHECK(ar.determinant() == doctest::Approx(p.delta_r).epsilon(1e-12));
  }
}

TEST_CASE("property: border distance depends on the first component only") {
  SplitMix64 rng(9);
  for (int k = 0; k < 5; ++k) {
    const MapInstance m = all_maps(k);
    for (int trial = 0; trial < 100; ++trial) {
      State s = random_state(rng, m.dim(), 2.0);
      const double d = border_distance(m, s);
      CHECK(d == s[0] - border_location(m));
      for (int i = 1; i < m.dim(); ++i) s[i] = rng.uniform(-10, 10);
      CHECK(border_distance(m, s) == d);
    }
  }
}
