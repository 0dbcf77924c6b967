#include "pwsml/bifurcation.hpp"

#include "pwsml/error.hpp"
#include "pwsml/parallel.hpp"
#include "pwsml/rng.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>

namespace pwsml {

double AxisSpec::at(std::size_t i) const noexcept {
  if (i + 1 >= n) return i == 0 ? lo : hi;
  const double step = (hi - lo) / static_cast<double>(n - 1);
  return static_cast<double>(i) * step + lo;
}

void AxisSpec::validate(const char* what) const {
  if (!(std::isfinite(lo) && std::isfinite(hi) && lo < hi)) {
    throw Error(ErrorCode::InvalidArgument, std::string(what) + ": range needs finite lo < hi");
  }
  if (n < 2) throw Error(ErrorCode::InvalidArgument, std::string(what) + ": need at least 2 grid points");
}

X0Policy X0Policy::default_for(const MapInstance& map) {
  X0Policy policy;
  if (map.dim() == 1) {
    policy.mode = X0Mode::Fixed;
    policy.fixed = State::Constant(1, 0.1);
  } else {
    policy.mode = X0Mode::SeededRandom;
  }
  return policy;
}

State X0Policy::initial(int dim, std::uint64_t seed, std::uint64_t index) const {
  if (mode == X0Mode::Fixed) {
    if (fixed.size() != dim) throw Error(ErrorCode::ShapeMismatch, "fixed x0 does not match the map dimension");
    return fixed;
  }
  auto rng = stream(seed, index, 0x5EED);
  State x(dim);
  for (int i = 0; i < dim; ++i) x[i] = rng.uniform(lo, hi);
  return x;
}

namespace {

ScanRecord scan_point(const SweepSpec& spec, std::size_t i) {
  ScanRecord rec;
  rec.param = spec.range.at(i);
  const MapInstance map = with_parameter(spec.base, spec.param, rec.param);
  const State x0 = spec.x0.initial(map.dim(), spec.seed, i);
  const auto& cfg = spec.iteration;
  try {
    rec.period = detect_period(map, x0, cfg);
    if (spec.attractor_samples > 0) {
      rec.attractor = simulate(map, x0, cfg.transient + spec.attractor_samples, cfg.transient).states;
    }
    if (spec.with_lyapunov) {
      rec.spectrum = lyapunov_spectrum(map, x0, cfg);
      rec.label = classify_behavior(*rec.spectrum);
    }
  } catch (const NonFiniteStateError& e) {
    rec.diverged = true;
    rec.note = e.what();
    rec.period = {};
    rec.attractor.clear();
    rec.spectrum.reset();
    rec.label.reset();
  }
  return rec;
}

std::vector<Branch> itinerary_of(const MapInstance& map, const std::vector<State>& cycle) {
  std::vector<Branch> out;
  out.reserve(cycle.size());
  for (const auto& s : cycle) out.push_back(detail::branch_raw(map, s));
  return out;
}

std::string itinerary_string(const std::vector<Branch>& it) {
  std::string s;
  for (auto b : it) s += b == Branch::Left ? 'L' : 'R';
  return s;
}

std::size_t left_count(const std::vector<Branch>& it) {
  return static_cast<std::size_t>(std::count(it.begin(), it.end(), Branch::Left));
}

struct Candidate {
  std::vector<Branch> itinerary;
  std::size_t tracked = 0;
};

double tracked_distance(const SweepSpec& spec, const Candidate& cand, double param) {
  const MapInstance map = with_parameter(spec.base, spec.param, param);
  const CycleSolution cycle = solve_cycle(map, cand.itinerary);
  if (!cycle.finite) return std::numeric_limits<double>::quiet_NaN();
  return cycle.points[cand.tracked][0] - border_location(map);
}

struct Refinement {
  double param_star = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  double residual = std::numeric_limits<double>::infinity();
};

std::optional<Refinement> bisect_candidate(const SweepSpec& spec, const Candidate& cand, double lo, double hi,
                                           double tol_param) {
  double g_lo = tracked_distance(spec, cand, lo);
  double g_hi = tracked_distance(spec, cand, hi);
  if (!std::isfinite(g_lo) || !std::isfinite(g_hi)) return std::nullopt;
  if (g_lo * g_hi > 0.0) return std::nullopt;

  Refinement r;
  if (g_lo == 0.0 || g_hi == 0.0) {
    r.param_star = g_lo == 0.0 ? lo : hi;
    r.lo = r.hi = r.param_star;
    r.residual = 0.0;
    return r;
  }
  double mid = 0.5 * (lo + hi);
  double g_mid = tracked_distance(spec, cand, mid);
  for (int iter = 0; iter < 200; ++iter) {
    if (!std::isfinite(g_mid) || g_mid == 0.0 || hi - lo < tol_param) break;
    if ((g_mid < 0.0) == (g_lo < 0.0)) {
      lo = mid;
      g_lo = g_mid;
    } else {
      hi = mid;
    }
    const double next = 0.5 * (lo + hi);
    if (next == mid) break;
    mid = next;
    g_mid = tracked_distance(spec, cand, mid);
  }
  r.param_star = mid;
  r.lo = lo;
  r.hi = hi;
  r.residual = std::isfinite(g_mid) ? std::abs(g_mid) : std::numeric_limits<double>::infinity();
  return r;
}

bool has_period(const ScanRecord& rec, std::size_t p) { return !rec.diverged && rec.period.period == p; }

// Bisection on "the target period is detected" for brackets where no
// continued cycle changes sign. Never counts as refined unless the cycle point
// really sits on the border.
BcbEvent predicate_refine(const SweepSpec& spec, std::size_t target, double lo, double hi, bool p_side_low,
                          double tol_param) {
  auto cycle_at = [&](double param) -> std::optional<PeriodResult> {
    const MapInstance map = with_parameter(spec.base, spec.param, param);
    const State x0 = spec.x0.initial(map.dim(), spec.seed, 0);
    try {
      PeriodResult pr = detect_period(map, x0, spec.iteration);
      if (pr.period == target) return pr;
    } catch (const NonFiniteStateError&) {
    }
    return std::nullopt;
  };
  for (int iter = 0; iter < 80 && hi - lo >= tol_param; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    const bool mid_has = cycle_at(mid).has_value();
    if (mid_has == p_side_low) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  BcbEvent ev;
  ev.bracket_lo = lo;
  ev.bracket_hi = hi;
  ev.param_star = p_side_low ? lo : hi;
  ev.border_point_residual = std::numeric_limits<double>::infinity();
  if (auto pr = cycle_at(ev.param_star)) {
    const MapInstance map = with_parameter(spec.base, spec.param, ev.param_star);
    for (const auto& s : pr->cycle_points) {
      ev.border_point_residual = std::min(ev.border_point_residual, std::abs(s[0] - border_location(map)));
    }
    ev.branch_sequence = itinerary_string(itinerary_of(map, pr->cycle_points));
  }
  ev.refined = ev.border_point_residual < kBorderResidualTol;
  return ev;
}

}  // namespace

BifurcationScan sweep_1p(const SweepSpec& spec) {
  spec.range.validate("sweep");
  (void)get_parameter(spec.base, spec.param);
  BifurcationScan scan;
  scan.records.resize(spec.range.n);
  parallel_for(spec.range.n, spec.workers, [&](std::size_t i) { scan.records[i] = scan_point(spec, i); });
  return scan;
}

std::vector<std::pair<double, std::optional<std::size_t>>> period_vs_param(const SweepSpec& spec,
                                                                          std::size_t max_period) {
  SweepSpec local = spec;
  local.iteration.max_period = max_period;
  local.with_lyapunov = false;
  local.attractor_samples = 0;
  const auto scan = sweep_1p(local);
  std::vector<std::pair<double, std::optional<std::size_t>>> out;
  out.reserve(scan.records.size());
  for (const auto& rec : scan.records) out.emplace_back(rec.param, rec.period.period);
  return out;
}

CycleSolution solve_cycle(const MapInstance& map, const std::vector<Branch>& itinerary) {
  CycleSolution out;
  if (itinerary.empty()) return out;
  const int dim = map.dim();
  const AffineBranch left = affine_branch(map, Branch::Left);
  const AffineBranch right = affine_branch(map, Branch::Right);

  Jacobian composed = Jacobian::Identity(dim, dim);
  State offset = State::Zero(dim);
  for (const Branch b : itinerary) {
    const AffineBranch& br = b == Branch::Left ? left : right;
    composed = (br.jacobian * composed).eval();
    offset = (br.jacobian * offset + br.offset).eval();
  }
  const Jacobian system = Jacobian::Identity(dim, dim) - composed;
  Eigen::FullPivLU<Jacobian> lu(system);
  if (!lu.isInvertible()) return out;
  State x = lu.solve(offset);
  if (!is_finite(x)) return out;

  out.points.reserve(itinerary.size());
  for (const Branch b : itinerary) {
    out.points.push_back(x);
    const AffineBranch& br = b == Branch::Left ? left : right;
    x = (br.jacobian * x + br.offset).eval();
  }
  out.finite = std::all_of(out.points.begin(), out.points.end(), [](const State& s) { return is_finite(s); });
  return out;
}

std::vector<BcbEvent> detect_bcb(const SweepSpec& spec, std::size_t target_period, double tol_param) {
  if (target_period < 1) throw Error(ErrorCode::InvalidArgument, "target period must be >= 1");
  if (!(tol_param > 0.0)) throw Error(ErrorCode::InvalidArgument, "tol_param must be positive");

  SweepSpec local = spec;
  local.iteration.max_period = std::max(local.iteration.max_period, target_period);
  local.with_lyapunov = false;
  local.attractor_samples = 0;
  const BifurcationScan scan = sweep_1p(local);
  const auto& recs = scan.records;

  std::vector<BcbEvent> events;
  for (std::size_t i = 0; i + 1 < recs.size(); ++i) {
    const bool a = has_period(recs[i], target_period);
    const bool b = has_period(recs[i + 1], target_period);
    bool bracket = a != b;
    if (a && b) {
      // A cycle point moved across the border while the period persisted.
      const auto ia = itinerary_of(with_parameter(spec.base, spec.param, recs[i].param), recs[i].period.cycle_points);
      const auto ib =
          itinerary_of(with_parameter(spec.base, spec.param, recs[i + 1].param), recs[i + 1].period.cycle_points);
      bracket = left_count(ia) != left_count(ib);
    }
    if (!bracket) continue;

    const double lo = recs[i].param;
    const double hi = recs[i + 1].param;

    std::vector<Candidate> candidates;
    for (std::size_t side : {i, i + 1}) {
      if (!has_period(recs[side], target_period)) continue;
      const MapInstance map = with_parameter(spec.base, spec.param, recs[side].param);
      const auto it = itinerary_of(map, recs[side].period.cycle_points);
      for (std::size_t k = 0; k < it.size(); ++k) candidates.push_back({it, k});
      for (std::size_t k = 0; k < it.size(); ++k) {
        auto flipped = it;
        flipped[k] = flipped[k] == Branch::Left ? Branch::Right : Branch::Left;
        candidates.push_back({flipped, k});
      }
    }

    std::optional<Refinement> best;
    std::string best_itinerary;
    auto try_bracket = [&](double from, double to) {
      for (const auto& cand : candidates) {
        auto r = bisect_candidate(spec, cand, from, to, tol_param);
        if (r && (!best || r->residual < best->residual)) {
          best = r;
          best_itinerary = itinerary_string(cand.itinerary);
        }
      }
    };
    try_bracket(lo, hi);
    if (!best) {
      // A grid point can land just past the collision, which puts the root
      // one cell outside the adjacent pair.
      try_bracket(recs[i == 0 ? 0 : i - 1].param, recs[std::min(i + 2, recs.size() - 1)].param);
    }

    BcbEvent ev;
    if (best) {
      ev.param_star = best->param_star;
      ev.bracket_lo = best->lo;
      ev.bracket_hi = best->hi;
      ev.border_point_residual = best->residual;
      ev.refined = best->residual < kBorderResidualTol;
      ev.branch_sequence = best_itinerary;
    } else {
      ev = predicate_refine(spec, target_period, lo, hi, a, tol_param);
    }
    ev.grid_param = a ? lo : hi;
    ev.period_before = recs[i].period.period;
    ev.period_after = recs[i + 1].period.period;
    events.push_back(ev);
  }
  return events;
}

ChartGrid chart_2p(const AxisSpec& tau_l, const AxisSpec& tau_r, const Bcb2DParams& params,
                   const IterationConfig& cfg, std::uint64_t seed, std::size_t workers) {
  tau_l.validate("tau_l axis");
  tau_r.validate("tau_r axis");
  ChartGrid grid;
  grid.tau_l = tau_l;
  grid.tau_r = tau_r;
  grid.source = ChartSource::GroundTruth;
  const std::size_t cells = tau_l.n * tau_r.n;
  grid.labels.assign(cells, 0);
  grid.diverged.assign(cells, 0);
  grid.lambda1.assign(cells, std::numeric_limits<double>::quiet_NaN());

  X0Policy policy;
  policy.mode = X0Mode::SeededRandom;
  parallel_for(cells, workers, [&](std::size_t idx) {
    const std::size_t r = idx / tau_l.n;
    const std::size_t c = idx % tau_l.n;
    Bcb2DParams p = params;
    p.tau_l = tau_l.at(c);
    p.tau_r = tau_r.at(r);
    const MapInstance map(p);
    const State x0 = policy.initial(2, seed, idx);
    try {
      const auto spectrum = lyapunov_spectrum(map, x0, cfg);
      grid.lambda1[idx] = spectrum.largest();
      grid.labels[idx] = classify_behavior(spectrum) == BehaviorLabel::Regular ? 0 : 1;
    } catch (const NonFiniteStateError&) {
      grid.diverged[idx] = 1;
    }
  });
  return grid;
}

}  // namespace pwsml
