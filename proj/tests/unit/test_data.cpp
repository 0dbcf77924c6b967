#include "doctest.h"
#include "oracles.hpp"

#include "pwsml/dataset.hpp"
#include "pwsml/error.hpp"
#include "pwsml/generators.hpp"
#include "pwsml/manifest.hpp"
#include "pwsml/raster.hpp"
#include "pwsml/rng.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>
#include <sstream>

using namespace pwsml;

namespace {

Dataset toy(std::size_t n, std::size_t cols, std::uint64_t seed) {
  SplitMix64 rng(seed);
  Dataset ds;
  ds.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      ds.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rng.normal() * 1e3 / 7.0;
    }
    ds.labels.push_back(static_cast<int>(rng.below(3)));
  }
  for (std::size_t c = 0; c < cols; ++c) ds.column_names.push_back("c" + std::to_string(c));
  return ds;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("pwsml_test_" + name);
}

}  // namespace

TEST_CASE("csv round trip is lossless") {
  const Dataset ds = toy(40, 5, 1);
  std::stringstream ss;
  write_csv(ds, ss);
  const Dataset back = read_csv(ss);
  CHECK(back.column_names == ds.column_names);
  CHECK(back.labels == ds.labels);
  REQUIRE(back.features.rows() == ds.features.rows());
  CHECK((back.features - ds.features).cwiseAbs().maxCoeff() == 0.0);

  const auto path = temp_path("round.csv");
  write_csv(ds, path.string());
  CHECK(read_csv(path.string()).labels == ds.labels);
  std::filesystem::remove(path);
}

TEST_CASE("csv header and parse errors") {
  std::stringstream out;
  Dataset tiny;
  tiny.features.resize(1, 2);
  tiny.features << 0.1, -2.0;
  tiny.labels = {3};
  tiny.column_names = {"mu", "final_x"};
  write_csv(tiny, out);
  CHECK(out.str() == "mu,final_x,label\n0.10000000000000001,-2,3\n");

  std::stringstream bad("a,b,label\n1,2,0\n3,4,1\n5,6,0\n7,oops,1\n");
  try {
    read_csv(bad);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 5);
    CHECK(e.code() == ErrorCode::ParseError);
  }

  std::stringstream empty("");
  try {
    read_csv(empty);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 1);
  }

  std::stringstream ragged("a,label\n1,0\n2\n");
  CHECK_THROWS_AS(read_csv(ragged), ParseError);
  std::stringstream no_label("a,b\n1,2\n");
  CHECK_THROWS_AS(read_csv(no_label), ParseError);
  CHECK_THROWS_AS(read_csv(std::string("/nonexistent/dir/x.csv")), Error);
}

TEST_CASE("dataset validation") {
  Dataset ds = toy(5, 2, 2);
  CHECK_NOTHROW(ds.validate());
  ds.labels.pop_back();
  CHECK_THROWS_AS(ds.validate(), Error);
  Dataset named = toy(5, 2, 2);
  named.label_names = {"a", "b"};
  named.labels = {0, 1, 2, 0, 1};
  CHECK_THROWS_AS(named.validate(), Error);
  Dataset nan = toy(5, 2, 2);
  nan.features(0, 0) = std::nan("");
  CHECK_THROWS_AS(nan.validate(), Error);
}

TEST_CASE("split sizes") {
  const SplitDataset a = split_dataset(toy(100, 2, 3), 0.2, 0);
  CHECK(a.train.rows() == 80);
  CHECK(a.test.rows() == 20);
  const SplitDataset b = split_dataset(toy(10, 2, 3), 0.3, 0);
  CHECK(b.train.rows() == 7);
  CHECK(b.test.rows() == 3);
  CHECK_THROWS_AS(split_dataset(toy(1, 2, 3), 0.5, 0), Error);
  CHECK_THROWS_AS(split_dataset(toy(10, 2, 3), 0.0, 0), Error);
  CHECK_THROWS_AS(split_dataset(toy(10, 2, 3), 1.0, 0), Error);
  try {
    split_dataset(toy(1, 2, 3), 0.5, 0);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::TooFewRows);
  }
}

TEST_CASE("property: splits are disjoint, exhaustive and reproducible") {
  SplitMix64 rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.below(300);
    const double frac = rng.uniform(0.05, 0.95);
    const std::uint64_t seed = rng.next();
    const Dataset ds = toy(n, 3, seed);
    const SplitDataset s = split_dataset(ds, frac, seed);
    std::set<std::size_t> all(s.train_rows.begin(), s.train_rows.end());
    for (auto r : s.test_rows) CHECK(all.insert(r).second);
    CHECK(all.size() == n);
    const double want = static_cast<double>(n) * frac;
    CHECK(std::abs(static_cast<double>(s.test.rows()) - want) <= 1.0);
    for (std::size_t i = 0; i < s.test_rows.size(); ++i) {
      CHECK(s.test.labels[i] == ds.labels[s.test_rows[i]]);
    }
    const SplitDataset again = split_dataset(ds, frac, seed);
    CHECK(again.train_rows == s.train_rows);
    CHECK(again.test_rows == s.test_rows);
  }
}

TEST_CASE("standardizer") {
  FeatureMatrix x(4, 2);
  x << 1, 5, 2, 5, 3, 5, 4, 5;
  const Standardizer s = Standardizer::fit(x);
  const FeatureMatrix z = s.apply(x);
  CHECK(z.col(0).sum() == doctest::Approx(0.0));
  CHECK(z.col(0).squaredNorm() / 4 == doctest::Approx(1.0));
  CHECK(z.col(1).cwiseAbs().maxCoeff() == 0.0);
  CHECK(s.scale[1] == 1.0);
  CHECK_THROWS_AS(s.apply(FeatureMatrix(2, 3)), Error);
}

TEST_CASE("pgm bytes and round trip") {
  const RasterImage white = RasterImage::blank(2, 2);
  const std::string bytes = encode_pgm(white);
  CHECK(bytes == std::string("P5\n2 2\n255\n") + std::string(4, '\xFF'));

  RasterImage img = RasterImage::blank(7, 3);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = static_cast<std::uint8_t>(i * 37);
  CHECK(decode_pgm(encode_pgm(img)) == img);

  const auto path = temp_path("img.pgm");
  write_pgm(img, path.string());
  CHECK(read_pgm(path.string()) == img);
  std::filesystem::remove(path);

  try {
    encode_pgm(RasterImage::blank(0, 5));
    FAIL("expected EmptyImage");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyImage);
  }
  CHECK_THROWS_AS(decode_pgm("P2\n1 1\n255\n0"), ParseError);
  CHECK_THROWS_AS(write_pgm(img, "/nonexistent/dir/x.pgm"), Error);
}

TEST_CASE("bresenham lines") {
  RasterImage img = RasterImage::blank(5, 5);
  draw_line(img, 0, 0, 4, 4);
  CHECK(img.count(kInk) == 5);
  for (std::size_t i = 0; i < 5; ++i) CHECK(img.at(i, i) == kInk);

  RasterImage h = RasterImage::blank(6, 3);
  draw_line(h, -3, 1, 10, 1);
  CHECK(h.count(kInk) == 6);

  // |dx| = 4, |dy| = 2: one pixel per column
  RasterImage shallow = RasterImage::blank(8, 8);
  draw_line(shallow, 1, 1, 5, 3);
  CHECK(shallow.count(kInk) == 5);
}

TEST_CASE("cobweb rendering") {
  const MapInstance tent(TentParams{1.5});
  const RasterImage bare = render_cobweb(tent, 0.1, 0, 64);
  // diagonal plus map graph, drawn independently
  RasterImage expect = RasterImage::blank(64, 64);
  const Window win{0.0, 1.0, 0.0, 1.0};
  draw_segment(expect, win, 0, 0, 1, 1);
  for (std::size_t k = 1; k < 64; ++k) {
    const double x0 = static_cast<double>(k - 1) / 63.0;
    const double x1 = static_cast<double>(k) / 63.0;
    if ((x0 <= 0.5) != (x1 <= 0.5)) continue;
    draw_segment(expect, win, x0, oracle::tent_step(1.5, x0), x1, oracle::tent_step(1.5, x1));
  }
  CHECK(bare == expect);

  const RasterImage web = render_cobweb(tent, 0.1, 50, 64);
  CHECK(web.count(kInk) > bare.count(kInk));
  CHECK(web == render_cobweb(tent, 0.1, 50, 64));

  CHECK(cobweb_window(MapInstance(TentParams{-0.53})).x_lo == -1.0);
  CHECK_THROWS_AS(render_cobweb(MapInstance(LoziParams{}), 0.1, 5, 64), Error);
  CHECK_THROWS_AS(render_cobweb(tent, 0.1, 5, 8), Error);
  CHECK_THROWS_AS(render_cobweb(MapInstance(NormalForm1DParams{3.0, 3.0, 0.0, 1.0}), 0.1, 2000, 64),
                  NonFiniteStateError);
}

TEST_CASE("phase portraits") {
  State fp(2);
  fp << 0.3, 0.2;
  const std::vector<State> same(50, fp);
  const PhasePortrait one = render_phase_portrait(same, {-1, 1, -1, 1}, 32);
  CHECK(one.image.count(kInk) == 1);
  CHECK(one.plotted == 50);

  State far(2);
  far << 5.0, 0.0;
  const PhasePortrait clipped = render_phase_portrait({fp, far}, {-1, 1, -1, 1}, 32);
  CHECK(clipped.clipped == 1);
  CHECK(clipped.plotted == 1);

  const PhasePortrait empty = render_phase_portrait({}, {-1, 1, -1, 1}, 32);
  CHECK(empty.empty);
  CHECK(empty.image.count(kBackground) == 32 * 32);

  // Lozi regular attractor is a handful of points, chaotic one is extended.
  const auto orbit = [](double a) {
    State x0(2);
    x0 << 0.1, 0.1;
    return simulate(MapInstance(LoziParams{a, 0.5}), x0, 7000, 5000).states;
  };
  const auto reg = render_phase_portrait(orbit(1.10), lozi_portrait_window(), 64);
  const auto cha = render_phase_portrait(orbit(1.68), lozi_portrait_window(), 64);
  CHECK(reg.image.count(kInk) < 20);
  CHECK(cha.image.count(kInk) > 200);
  CHECK(cha.clipped == 0);
}

TEST_CASE("period dataset") {
  SweepSpec nf(MapInstance(NormalForm1DParams{0.5, 0.5, -0.1, 0.0}), "mu", AxisSpec{-0.1, 0.2, 1000});
  const Dataset ds = gen_period_dataset(nf, 32);
  const auto labels = distinct_labels(ds.labels);
  CHECK(std::count(labels.begin(), labels.end(), 1) == 1);
  CHECK(std::count(labels.begin(), labels.end(), 9) == 1);
  CHECK(ds.column_names == std::vector<std::string>{"mu", "final_x"});
  CHECK_NOTHROW(ds.validate());
  // every label re-derived by direct iteration
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    const double mu = ds.features(static_cast<Eigen::Index>(r), 0);
    const auto p = oracle::nf_period(0.5, 0.5, -0.1, mu, 0.1, 5000, 32, 1e-9);
    REQUIRE(p);
    CHECK(static_cast<int>(*p) == ds.labels[r]);
  }

  SweepSpec tent(MapInstance(TentParams{}), "mu", AxisSpec{-0.999, 0.999, 300});
  const std::set<int> allowed{1, 2, 4, 8, 16};
  for (int l : gen_period_dataset(tent, 32).labels) CHECK(allowed.count(l) == 1);

  SweepSpec two(MapInstance(NormalForm1DParams{0.5, 0.5, -0.1, 0.0}), "mu", AxisSpec{-0.1, -0.05, 2});
  const Dataset d2 = gen_period_dataset(two, 32);
  CHECK(d2.rows() == 2);
  CHECK(d2.labels == std::vector<int>{1, 1});
}

TEST_CASE("period dataset with no periodic points is flagged") {
  SweepSpec chaos(MapInstance(TentParams{}), "mu", AxisSpec{1.3, 1.5, 5});
  const Dataset ds = gen_period_dataset(chaos, 8);
  CHECK(ds.rows() == 0);
  bool flagged = false;
  for (const auto& [k, v] : ds.provenance) flagged |= (k == "empty" && v == "true");
  CHECK(flagged);
}

TEST_CASE("tent cobweb dataset") {
  ImageDatasetConfig cfg;
  cfg.n_samples = 100;
  cfg.seed = 12;
  cfg.cobweb_steps = 100;
  const ImageDataset a = gen_image_dataset(cfg);
  REQUIRE(a.images.size() == 100);
  CHECK(a.labels.size() == 100);
  for (std::size_t i = 0; i < 100; ++i) {
    CHECK(a.labels[i] == (oracle::tent_lyapunov(a.params[i]) > 0.0 ? 1 : 0));
    CHECK(a.images[i].width == 64);
  }
  cfg.workers = 3;
  const ImageDataset b = gen_image_dataset(cfg);
  CHECK(a.images == b.images);
  CHECK(a.labels == b.labels);

  const Dataset flat = to_dataset(a);
  CHECK(flat.cols() == 64 * 64);
  CHECK(flat.features.minCoeff() >= 0.0);
  CHECK(flat.features.maxCoeff() <= 1.0);
  ImageDatasetConfig one;
  one.n_samples = 1;
  CHECK_THROWS_AS(gen_image_dataset(one), Error);
}

TEST_CASE("tent labels for fixed parameters") {
  CHECK(lyapunov_spectrum(MapInstance(TentParams{1.2}), State::Constant(1, 0.1)).largest() > 0.0);
  CHECK(lyapunov_spectrum(MapInstance(TentParams{-0.53}), State::Constant(1, 0.1)).largest() < 0.0);
  CHECK(lyapunov_spectrum(MapInstance(TentParams{-1.37}), State::Constant(1, 0.1)).largest() > 0.0);
  State x0(2);
  x0 << 0.1, 0.1;
  CHECK(lyapunov_spectrum(MapInstance(LoziParams{1.10, 0.5}), x0).largest() < 0.0);
}

TEST_CASE("property: Lozi image labels agree with the oracle") {
  ImageDatasetConfig cfg;
  cfg.family = ImageFamily::LoziPortrait;
  cfg.n_samples = 60;
  cfg.seed = 5;
  cfg.portrait_points = 500;
  const ImageDataset ds = gen_image_dataset(cfg);
  std::size_t compared = 0;
  for (std::size_t i = 0; i < ds.images.size(); ++i) {
    // replay the sample's first draw; resampled samples are skipped
    SplitMix64 rng = stream(cfg.seed, i);
    const double a = rng.uniform(-0.1, 1.7);
    if (a != ds.params[i]) continue;
    const oracle::V2 x0{rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)};
    const oracle::Lyap2 o = oracle::lozi_lyapunov(a, 0.5, x0, 5000, 10000);
    REQUIRE_FALSE(o.diverged);
    // chaotic orbits decorrelate between the two implementations, so only
    // samples clear of the sign boundary are compared
    if (std::abs(o.l1) < 0.03) continue;
    ++compared;
    CHECK(ds.labels[i] == (o.l1 > 0.0 ? 1 : 0));
  }
  CHECK(compared > 40);
}

TEST_CASE("orbit feature dataset") {
  OrbitDatasetConfig cfg;
  cfg.n_samples = 60;
  cfg.window = 64;
  cfg.seed = 2;
  const OrbitFeatureDataset ds = gen_orbit_feature_dataset(cfg);
  CHECK(ds.data.rows() + ds.excluded == 60);
  CHECK(ds.data.cols() == 192);
  CHECK(ds.data.column_names.front() == "x_0");
  CHECK(ds.data.column_names.back() == "z_63");
  const auto labels = distinct_labels(ds.data.labels);
  CHECK(std::count(labels.begin(), labels.end(), 2) == 1);
  for (int l : labels) CHECK((l >= 0 && l <= 2));

  cfg.workers = 4;
  const OrbitFeatureDataset again = gen_orbit_feature_dataset(cfg);
  CHECK(again.data.labels == ds.data.labels);
  CHECK((again.data.features - ds.data.features).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("orbit feature dataset: regular sub-range") {
  OrbitDatasetConfig cfg;
  cfg.delta_r_lo = -0.91;
  cfg.delta_r_hi = -0.85;
  cfg.n_samples = 30;
  cfg.window = 8;
  cfg.seed = 9;
  const OrbitFeatureDataset ds = gen_orbit_feature_dataset(cfg);
  REQUIRE(ds.data.rows() == 30);
  for (std::size_t i = 0; i < ds.data.rows(); ++i) {
    CHECK(ds.data.labels[i] == 0);
    SplitMix64 rng = stream(cfg.seed, i);
    oracle::Pws3 p;
    p.dr = rng.uniform(cfg.delta_r_lo, cfg.delta_r_hi);
    CHECK(p.dr == ds.delta_r[i]);
    const oracle::V3 x0{rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)};
    const oracle::Lyap3 o = oracle::pws3_lyapunov(p, x0, 5000, 10000);
    REQUIRE_FALSE(o.diverged);
    CHECK(oracle::pws3_label(o) == 0);
  }
}

TEST_CASE("manifest round trip") {
  Manifest m;
  m.set("tool", "pwsml");
  m.set("seed", 7);
  m.set("tol", 1e-9);
  m.set("flag", true);
  m.set("seed", 8);
  const Manifest back = Manifest::parse(m.str());
  CHECK(back.get("seed") == std::optional<std::string>("8"));
  CHECK(back.get("tol") == std::optional<std::string>("1e-09"));
  CHECK(back.get("flag") == std::optional<std::string>("true"));
  CHECK_FALSE(back.get("missing"));
  CHECK(back.entries().size() == 4);
  CHECK(back.str() == m.str());
}
