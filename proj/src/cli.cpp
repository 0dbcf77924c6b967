#include "pwsml/cli.hpp"

#include "pwsml/bifurcation.hpp"
#include "pwsml/dynamics.hpp"
#include "pwsml/error.hpp"
#include "pwsml/format.hpp"
#include "pwsml/generators.hpp"
#include "pwsml/manifest.hpp"
#include "pwsml/ml/knn.hpp"
#include "pwsml/ml/linear.hpp"
#include "pwsml/ml/metrics.hpp"
#include "pwsml/ml/nn.hpp"
#include "pwsml/ml/tree.hpp"
#include "pwsml/pipeline.hpp"
#include "pwsml/raster.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

namespace pwsml::cli {

namespace {

namespace fs = std::filesystem;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Map parameter flags, CLI spelling -> library name.
constexpr std::pair<const char*, const char*> kParamFlags[] = {
    {"a", "a"},             {"b", "b"},         {"l", "l"},             {"mu", "mu"},
    {"tau-l", "tau_l"},     {"sigma-l", "sigma_l"}, {"delta-l", "delta_l"}, {"tau-r", "tau_r"},
    {"sigma-r", "sigma_r"}, {"delta-r", "delta_r"},
};
constexpr std::size_t kParamCount = std::size(kParamFlags);

// Every option is held as text so that it can be echoed into the manifest
// verbatim and replayed by `rerun`. Empty means "command default".
struct Options {
  std::string out;
  std::string workers;
  std::string seed;
  std::string tol;
  std::string transient;
  std::string iters;
  std::string max_period;

  std::string map;
  std::array<std::string, kParamCount> params;
  std::string x0;
  std::string param;
  std::string range;
  std::string points;
  std::string samples;
  bool lyapunov = false;

  std::string period;
  std::string tol_param;

  std::string family;
  std::string resolution;
  std::string window;
  std::string save_images;
  std::string name;

  std::string model;
  std::string dataset;
  std::string test_fraction;
  std::string max_depth;
  std::string min_leaf;
  std::string trees;
  std::string k;
  std::string epochs;
  std::string lr;
  std::string reg;
  std::string batch_size;
  std::string dropout;
  std::string n_out;
  std::string image_size;

  std::string mode;
  std::string grid;
  std::string tau_l_range;
  std::string tau_r_range;
  std::string region;
  std::string holdout;

  std::string manifest;
};

struct Registry {
  std::vector<std::pair<std::string, std::string*>> values;
  std::vector<std::pair<std::string, bool*>> flags;
};

std::string underscored(std::string s) {
  std::replace(s.begin(), s.end(), '-', '_');
  return s;
}

void value(CLI::App* app, Registry& reg, const std::string& name, std::string& target, const std::string& help) {
  std::string names = "--" + name;
  if (underscored(name) != name) names += ",--" + underscored(name);
  app->add_option(names, target, help);
  reg.values.emplace_back(name, &target);
}

void flag(CLI::App* app, Registry& reg, const std::string& name, bool& target, const std::string& help) {
  app->add_flag("--" + name, target, help);
  reg.flags.emplace_back(name, &target);
}

double to_double(const std::string& name, const std::string& text) {
  double v = 0.0;
  if (!parse_double(text, v) || !std::isfinite(v)) throw UsageError("--" + name + ": '" + text + "' is not a finite number");
  return v;
}

std::size_t to_size(const std::string& name, const std::string& text) {
  long long v = 0;
  if (!parse_int(text, v) || v < 0) throw UsageError("--" + name + ": '" + text + "' is not a non-negative integer");
  return static_cast<std::size_t>(v);
}

double opt_double(const std::string& name, const std::string& text, double fallback) {
  return text.empty() ? fallback : to_double(name, text);
}

std::size_t opt_size(const std::string& name, const std::string& text, std::size_t fallback) {
  return text.empty() ? fallback : to_size(name, text);
}

std::vector<double> split_numbers(const std::string& name, const std::string& text, char sep) {
  std::vector<double> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t at = text.find(sep, start);
    out.push_back(to_double(name, text.substr(start, at == std::string::npos ? std::string::npos : at - start)));
    if (at == std::string::npos) return out;
    start = at + 1;
  }
}

std::pair<double, double> parse_range(const std::string& name, const std::string& text) {
  const auto v = split_numbers(name, text, ':');
  if (v.size() != 2 || !(v[0] < v[1])) throw UsageError("--" + name + ": expected lo:hi with lo < hi, got '" + text + "'");
  return {v[0], v[1]};
}

std::pair<std::size_t, std::size_t> parse_grid(const std::string& name, const std::string& text) {
  const std::size_t x = text.find('x');
  if (x == std::string::npos) throw UsageError("--" + name + ": expected WxH, got '" + text + "'");
  return {to_size(name, text.substr(0, x)), to_size(name, text.substr(x + 1))};
}

MapKind map_kind(const Options& o, const char* fallback) {
  try {
    return parse_kind(o.map.empty() ? fallback : o.map);
  } catch (const Error& e) {
    throw UsageError(std::string("--map: ") + e.what());
  }
}

MapInstance default_map(MapKind kind) {
  switch (kind) {
    case MapKind::NormalForm1D:
      return MapInstance(NormalForm1DParams{});
    case MapKind::Tent:
      return MapInstance(TentParams{});
    case MapKind::Lozi:
      return MapInstance(LoziParams{});
    case MapKind::Pws3D:
      return MapInstance(Pws3DParams{});
    case MapKind::Bcb2D:
      return MapInstance(Bcb2DParams{});
  }
  return MapInstance(TentParams{});
}

MapInstance build_map(const Options& o, MapKind kind) {
  MapInstance map = default_map(kind);
  const auto names = parameter_names(kind);
  for (std::size_t i = 0; i < kParamCount; ++i) {
    if (o.params[i].empty()) continue;
    const std::string lib = kParamFlags[i].second;
    if (std::find(names.begin(), names.end(), lib) == names.end()) {
      throw UsageError(std::string("--") + kParamFlags[i].first + " does not apply to map " +
                       std::string(kind_name(kind)));
    }
    map = with_parameter(map, lib, to_double(kParamFlags[i].first, o.params[i]));
  }
  return map;
}

const char* default_param(MapKind kind) {
  switch (kind) {
    case MapKind::Lozi:
      return "a";
    case MapKind::Pws3D:
      return "delta_r";
    case MapKind::Bcb2D:
      return "tau_l";
    default:
      return "mu";
  }
}

std::pair<double, double> default_range(MapKind kind) {
  switch (kind) {
    case MapKind::NormalForm1D:
      return {-0.1, 0.2};
    case MapKind::Tent:
      return {-1.5, 1.5};
    case MapKind::Lozi:
      return {-0.1, 1.7};
    case MapKind::Pws3D:
      return {-1.05, -0.85};
    case MapKind::Bcb2D:
      return {-1.0, 3.0};
  }
  return {0.0, 1.0};
}

IterationConfig iteration(const Options& o, IterationConfig base) {
  base.transient = opt_size("transient", o.transient, base.transient);
  base.iterations = opt_size("iters", o.iters, base.iterations);
  base.period_tol = opt_double("tol", o.tol, base.period_tol);
  base.max_period = opt_size("max-period", o.max_period, base.max_period);
  if (base.iterations == 0) throw UsageError("--iters must be positive");
  if (base.max_period == 0) throw UsageError("--max-period must be positive");
  return base;
}

struct Context {
  fs::path dir;
  std::ostream& out;
  Manifest manifest;
  std::size_t workers = 1;
  std::uint64_t seed = 0;
  std::vector<std::string> artifacts;

  fs::path artifact(const std::string& name) {
    artifacts.push_back(name);
    return dir / name;
  }
};

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "' for writing");
  f << text;
  if (!f) throw Error(ErrorCode::IoError, "write to '" + path.string() + "' failed");
}

void record_iteration(Manifest& m, const IterationConfig& it) {
  m.set("config.transient", it.transient);
  m.set("config.iterations", it.iterations);
  m.set("config.period_tol", it.period_tol);
  m.set("config.max_period", it.max_period);
}

std::string state_header(int dim) {
  static const char* names[3] = {"x", "y", "z"};
  std::string h;
  for (int d = 0; d < dim; ++d) h += std::string(",") + names[d];
  return h;
}

std::string state_cells(const State& s) {
  std::string out;
  for (Eigen::Index d = 0; d < s.size(); ++d) out += "," + format_g17(s[d]);
  return out;
}

State parse_state(const std::string& text, int dim) {
  const auto v = split_numbers("x0", text, ',');
  if (static_cast<int>(v.size()) != dim) {
    throw UsageError("--x0: map needs " + std::to_string(dim) + " coordinates, got " + std::to_string(v.size()));
  }
  State s(dim);
  for (int d = 0; d < dim; ++d) s[d] = v[static_cast<std::size_t>(d)];
  return s;
}

int cmd_simulate(const Options& o, Context& ctx) {
  const MapInstance map = build_map(o, map_kind(o, "tent"));
  const IterationConfig it = iteration(o, IterationConfig{});
  const State x0 = o.x0.empty() ? X0Policy::default_for(map).initial(map.dim(), ctx.seed, 0) : parse_state(o.x0, map.dim());
  ctx.manifest.set("config.map", describe(map));
  ctx.manifest.set("config.x0", state_cells(x0).substr(1));
  record_iteration(ctx.manifest, it);

  const Orbit orbit = simulate(map, x0, it.transient + it.iterations, it.transient);
  std::string csv = "n" + state_header(map.dim()) + "\n";
  for (std::size_t k = 0; k < orbit.states.size(); ++k) {
    csv += std::to_string(it.transient + 1 + k) + state_cells(orbit.states[k]) + "\n";
  }
  write_file(ctx.artifact("orbit.csv"), csv);

  const PeriodResult pr = detect_period(map, x0, it);
  const LyapunovSpectrum sp = lyapunov_spectrum(map, x0, it);
  const BehaviorLabel label = classify_behavior(sp);
  std::string lyap;
  for (double l : sp.exponents) lyap += (lyap.empty() ? "" : " ") + format_short(l);
  ctx.out << describe(map) << "\n";
  ctx.out << "period " << (pr.period ? std::to_string(*pr.period) : std::string("none")) << "\n";
  ctx.out << "lyapunov " << lyap << "\n";
  ctx.out << "behaviour " << label_name(label) << "\n";
  ctx.manifest.set("result.period", pr.period ? std::to_string(*pr.period) : std::string("none"));
  ctx.manifest.set("result.lyapunov", lyap);
  ctx.manifest.set("result.behaviour", label_name(label));
  return kOk;
}

SweepSpec make_sweep(const Options& o, const MapInstance& map, Context& ctx, const IterationConfig& it) {
  const std::string param = o.param.empty() ? default_param(map.kind()) : underscored(o.param);
  const auto names = parameter_names(map.kind());
  if (std::find(names.begin(), names.end(), param) == names.end()) {
    throw UsageError("--param: '" + param + "' is not a parameter of " + std::string(kind_name(map.kind())));
  }
  std::pair<double, double> range;
  if (!o.range.empty()) {
    range = parse_range("range", o.range);
  } else if (param == default_param(map.kind())) {
    range = default_range(map.kind());
  } else {
    throw UsageError("--range is required when sweeping '" + param + "'");
  }
  SweepSpec s(map, param, AxisSpec{range.first, range.second, opt_size("points", o.points, 1000)});
  s.range.validate("--points");
  s.seed = ctx.seed;
  s.iteration = it;
  s.workers = ctx.workers;
  ctx.manifest.set("config.map", describe(map));
  ctx.manifest.set("config.param", param);
  ctx.manifest.set("config.range_lo", range.first);
  ctx.manifest.set("config.range_hi", range.second);
  ctx.manifest.set("config.points", s.range.n);
  record_iteration(ctx.manifest, it);
  return s;
}

int cmd_sweep(const Options& o, Context& ctx) {
  const MapInstance map = build_map(o, map_kind(o, "tent"));
  SweepSpec s = make_sweep(o, map, ctx, iteration(o, IterationConfig{}));
  s.with_lyapunov = o.lyapunov;
  s.attractor_samples = opt_size("samples", o.samples, 64);
  ctx.manifest.set("config.lyapunov", o.lyapunov);
  ctx.manifest.set("config.attractor_samples", s.attractor_samples);
  const BifurcationScan scan = sweep_1p(s);

  const int dim = map.dim();
  std::string summary = "param,period";
  for (int d = 0; d < dim; ++d) summary += ",lambda_" + std::to_string(d + 1);
  summary += ",label,diverged\n";
  std::string attractor = "param" + state_header(dim) + "\n";
  std::size_t diverged = 0;
  for (const auto& rec : scan.records) {
    summary += format_g17(rec.param) + "," + (rec.period.period ? std::to_string(*rec.period.period) : "");
    for (int d = 0; d < dim; ++d) {
      summary += ",";
      if (rec.spectrum) summary += format_g17(rec.spectrum->exponents[static_cast<std::size_t>(d)]);
    }
    summary += "," + (rec.label ? std::to_string(static_cast<int>(*rec.label)) : std::string());
    summary += rec.diverged ? ",1\n" : ",0\n";
    diverged += rec.diverged ? 1 : 0;
    for (const auto& st : rec.attractor) attractor += format_g17(rec.param) + state_cells(st) + "\n";
  }
  write_file(ctx.artifact("sweep.csv"), summary);
  write_file(ctx.artifact("attractor.csv"), attractor);
  ctx.out << scan.records.size() << " grid points, " << diverged << " diverged\n";
  ctx.manifest.set("result.points", scan.records.size());
  ctx.manifest.set("result.diverged", diverged);
  return kOk;
}

int cmd_detect_bcb(const Options& o, Context& ctx) {
  const MapInstance map = build_map(o, map_kind(o, "normal-form"));
  const SweepSpec s = make_sweep(o, map, ctx, iteration(o, IterationConfig::bcb_scan()));
  const std::size_t period = opt_size("period", o.period, 1);
  const double tol_param = opt_double("tol-param", o.tol_param, 1e-12);
  if (period == 0) throw UsageError("--period must be positive");
  ctx.manifest.set("config.period", period);
  ctx.manifest.set("config.tol_param", tol_param);

  const auto events = detect_bcb(s, period, tol_param);
  std::string csv = "param_star,grid_param,bracket_lo,bracket_hi,period_before,period_after,residual,refined,itinerary\n";
  auto opt = [](const std::optional<std::size_t>& p) { return p ? std::to_string(*p) : std::string(); };
  for (const auto& e : events) {
    csv += format_g17(e.param_star) + "," + format_g17(e.grid_param) + "," + format_g17(e.bracket_lo) + "," +
           format_g17(e.bracket_hi) + "," + opt(e.period_before) + "," + opt(e.period_after) + "," +
           format_g17(e.border_point_residual) + "," + (e.refined ? "1" : "0") + "," + e.branch_sequence + "\n";
    char line[256];
    std::snprintf(line, sizeof line, "%s* = %.17g  grid = %.17g  residual = %.3g  %s\n", s.param.c_str(), e.param_star,
                  e.grid_param, e.border_point_residual, e.refined ? "refined" : "unrefined");
    ctx.out << line;
  }
  write_file(ctx.artifact("bcb.csv"), csv);
  ctx.out << events.size() << " border-collision event(s) for period " << period << "\n";
  ctx.manifest.set("result.events", events.size());
  for (std::size_t i = 0; i < events.size(); ++i) {
    ctx.manifest.set("result.param_star." + std::to_string(i), format_g17(events[i].param_star));
    ctx.manifest.set("result.grid_param." + std::to_string(i), format_g17(events[i].grid_param));
  }
  return kOk;
}

std::string compact_name(std::string_view kind) {
  std::string s(kind);
  s.erase(std::remove(s.begin(), s.end(), '-'), s.end());
  return s;
}

int cmd_gen_dataset(const Options& o, Context& ctx) {
  const std::string family = o.family.empty() ? "period" : o.family;
  Dataset ds;
  std::string name;
  if (family == "period") {
    const MapInstance map = build_map(o, map_kind(o, "normal-form"));
    const IterationConfig it = iteration(o, IterationConfig{});
    const SweepSpec s = make_sweep(o, map, ctx, it);
    ds = gen_period_dataset(s, it.max_period);
    name = "period_" + compact_name(kind_name(map.kind())) + ".csv";
  } else if (family == "cobweb" || family == "lozi") {
    if (!o.map.empty()) throw UsageError("--map does not apply to image families");
    ImageDatasetConfig c;
    c.family = family == "cobweb" ? ImageFamily::TentCobweb : ImageFamily::LoziPortrait;
    c.n_samples = opt_size("samples", o.samples, 1000);
    c.resolution = opt_size("resolution", o.resolution, 64);
    c.seed = ctx.seed;
    c.iteration = iteration(o, IterationConfig{});
    c.workers = ctx.workers;
    const ImageDataset images = gen_image_dataset(c);
    const std::size_t n_save = std::min(opt_size("save-images", o.save_images, 0), images.images.size());
    if (n_save > 0) fs::create_directories(ctx.dir / "images");
    for (std::size_t i = 0; i < n_save; ++i) {
      const std::string img = "images/" + family + "_" + std::to_string(i) + "_label" + std::to_string(images.labels[i]) + ".pgm";
      write_pgm(images.images[i], ctx.artifact(img).string());
    }
    std::string params = "index,param,lambda1,label\n";
    for (std::size_t i = 0; i < images.images.size(); ++i) {
      params += std::to_string(i) + "," + format_g17(images.params[i]) + "," + format_g17(images.lambda1[i]) + "," +
                std::to_string(images.labels[i]) + "\n";
    }
    write_file(ctx.artifact(family + "_params.csv"), params);
    ds = to_dataset(images);
    name = family + ".csv";
  } else if (family == "pws3d") {
    OrbitDatasetConfig c;
    c.base = build_map(o, map_kind(o, "pws3d")).get<Pws3DParams>();
    if (!o.range.empty()) std::tie(c.delta_r_lo, c.delta_r_hi) = parse_range("range", o.range);
    c.n_samples = opt_size("samples", o.samples, 500);
    c.window = opt_size("window", o.window, 64);
    c.seed = ctx.seed;
    c.iteration = iteration(o, IterationConfig{});
    c.workers = ctx.workers;
    const OrbitFeatureDataset orbit = gen_orbit_feature_dataset(c);
    ds = orbit.data;
    name = "pws3d.csv";
  } else {
    throw UsageError("--family must be one of period, cobweb, lozi, pws3d");
  }
  if (!o.name.empty()) name = o.name;
  write_csv(ds, ctx.artifact(name).string());
  std::string hist;
  for (int l : distinct_labels(ds.labels)) {
    const auto n = static_cast<std::size_t>(std::count(ds.labels.begin(), ds.labels.end(), l));
    hist += (hist.empty() ? "" : " ") + std::to_string(l) + ":" + std::to_string(n);
  }
  ctx.manifest.set("config.family", family);
  ctx.manifest.merge(ds.provenance, "provenance.");
  ctx.manifest.set("result.rows", ds.rows());
  ctx.manifest.set("result.columns", ds.cols());
  ctx.manifest.set("result.label_counts", hist);
  ctx.out << "wrote " << name << ": " << ds.rows() << " rows x " << ds.cols() << " features, labels " << hist << "\n";
  return kOk;
}

void write_report(Context& ctx, const std::string& stem, const ml::EvalReport& report) {
  std::ostringstream csv;
  ml::write_report_csv(report, csv);
  write_file(ctx.artifact(stem + ".csv"), csv.str());
  write_file(ctx.artifact(stem + ".txt"), ml::report_text(report));
  ctx.manifest.set("result.accuracy", report.accuracy);
  ctx.manifest.set("result.rows", report.n);
}

std::pair<std::size_t, std::size_t> image_shape(const Options& o, std::size_t width) {
  if (!o.image_size.empty()) {
    const auto [w, h] = parse_grid("image-size", o.image_size);
    if (w * h != width) throw Error(ErrorCode::ShapeMismatch, "--image-size does not match the dataset width");
    return {h, w};
  }
  const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(width))));
  if (side * side != width) throw Error(ErrorCode::ShapeMismatch, "dataset width is not a square image; pass --image-size");
  return {side, side};
}

int cmd_train(const Options& o, Context& ctx) {
  if (o.model.empty()) throw UsageError("--model is required");
  if (o.dataset.empty()) throw UsageError("--dataset is required");
  const Dataset ds = read_csv(o.dataset);
  const double fraction = opt_double("test-fraction", o.test_fraction, 0.2);
  const SplitDataset split = split_dataset(ds, fraction, ctx.seed);
  ctx.manifest.set("config.dataset", fs::path(o.dataset).filename().string());
  ctx.manifest.set("config.test_fraction", fraction);
  ctx.manifest.set("config.train_rows", split.train.rows());
  ctx.manifest.set("config.test_rows", split.test.rows());

  const std::size_t unlimited = std::numeric_limits<std::size_t>::max();
  std::unique_ptr<ml::Classifier> model;
  std::vector<double> losses;
  const std::string& kind = o.model;
  if (kind == "dtc") {
    ml::TreeParams p;
    p.max_depth = opt_size("max-depth", o.max_depth, unlimited);
    p.min_leaf = opt_size("min-leaf", o.min_leaf, 1);
    model = std::make_unique<ml::DecisionTree>(ml::train_decision_tree(split.train, p));
  } else if (kind == "rf") {
    ml::ForestParams p;
    p.n_trees = opt_size("trees", o.trees, 100);
    p.max_depth = opt_size("max-depth", o.max_depth, unlimited);
    p.min_leaf = opt_size("min-leaf", o.min_leaf, 1);
    p.seed = ctx.seed;
    model = std::make_unique<ml::RandomForest>(ml::train_random_forest(split.train, p));
  } else if (kind == "knn") {
    model = std::make_unique<ml::Knn>(ml::train_knn(split.train, opt_size("k", o.k, 5)));
  } else if (kind == "logreg") {
    model = std::make_unique<ml::LinearModel>(
        ml::train_logistic_regression(split.train, opt_size("epochs", o.epochs, 500), opt_double("lr", o.lr, 0.1)));
  } else if (kind == "svm") {
    model = std::make_unique<ml::LinearModel>(ml::train_linear_svm(split.train, opt_size("epochs", o.epochs, 500),
                                                                   opt_double("lr", o.lr, 0.1),
                                                                   opt_double("reg", o.reg, 1e-4), ctx.seed));
  } else if (kind == "mlp" || kind == "cnn") {
    ml::TrainConfig tc;
    tc.batch_size = opt_size("batch-size", o.batch_size, 32);
    tc.lr = opt_double("lr", o.lr, 1e-3);
    tc.seed = ctx.seed;
    const int max_label = *std::max_element(ds.labels.begin(), ds.labels.end());
    if (kind == "mlp") {
      ml::MlpArch arch;
      arch.n_inputs = ds.cols();
      arch.n_outputs = opt_size("n-out", o.n_out, 4);
      arch.dropout = opt_double("dropout", o.dropout, 0.2);
      if (max_label >= static_cast<int>(arch.n_outputs)) {
        throw Error(ErrorCode::IncompatibleModel, "label " + std::to_string(max_label) + " needs --n-out > " +
                                                      std::to_string(max_label));
      }
      tc.epochs = opt_size("epochs", o.epochs, 100);
      model = std::make_unique<ml::NeuralClassifier>(
          ml::train_neural_classifier("mlp", ml::build_mlp(arch, ctx.seed), split.train, tc, true));
    } else {
      const auto [h, w] = image_shape(o, ds.cols());
      const std::size_t n_out = opt_size("n-out", o.n_out, 2);
      if (max_label >= static_cast<int>(n_out)) {
        throw Error(ErrorCode::IncompatibleModel, "label " + std::to_string(max_label) + " needs --n-out > " +
                                                      std::to_string(max_label));
      }
      tc.epochs = opt_size("epochs", o.epochs, 50);
      model = std::make_unique<ml::NeuralClassifier>(
          ml::train_neural_classifier("cnn", ml::build_cnn(h, w, n_out, ctx.seed), split.train, tc, false));
    }
    losses = static_cast<ml::NeuralClassifier&>(*model).history().loss;
  } else {
    throw UsageError("--model must be one of dtc, rf, knn, logreg, svm, mlp, cnn");
  }

  const std::string stem = o.name.empty() ? kind : o.name;
  model->save(ctx.artifact(stem + ".model").string());
  for (const auto& [k, v] : model->hyperparameters()) ctx.manifest.set("model." + k, v);
  if (!losses.empty()) {
    std::string csv = "epoch,loss\n";
    for (std::size_t e = 0; e < losses.size(); ++e) csv += std::to_string(e + 1) + "," + format_g17(losses[e]) + "\n";
    write_file(ctx.artifact(stem + "_loss.csv"), csv);
  }
  const ml::EvalReport report = ml::evaluate(*model, split.test);
  write_report(ctx, stem + "_report", report);
  ctx.out << kind << " test accuracy " << format_short(report.accuracy) << " (" << report.n << " rows)\n";
  return kOk;
}

int cmd_evaluate(const Options& o, Context& ctx) {
  if (o.model.empty()) throw UsageError("--model is required (path to a saved model)");
  if (o.dataset.empty()) throw UsageError("--dataset is required");
  const auto model = ml::load_model(o.model);
  Dataset ds = read_csv(o.dataset);
  ctx.manifest.set("config.model", fs::path(o.model).filename().string());
  ctx.manifest.set("config.dataset", fs::path(o.dataset).filename().string());
  if (!o.test_fraction.empty()) {
    const double fraction = to_double("test-fraction", o.test_fraction);
    ds = split_dataset(ds, fraction, ctx.seed).test;
    ctx.manifest.set("config.test_fraction", fraction);
  }
  const ml::EvalReport report = ml::evaluate(*model, ds);
  const std::string stem = o.name.empty() ? model->kind() + "_eval" : o.name;
  write_report(ctx, stem, report);
  ctx.out << ml::report_text(report);
  return kOk;
}

void write_chart(Context& ctx, const std::string& stem, const ChartGrid& chart) {
  write_pgm(chart_image(chart), ctx.artifact(stem + ".pgm").string());
  std::string csv = "tau_l,tau_r,label,diverged,lambda1\n";
  for (std::size_t r = 0; r < chart.rows(); ++r) {
    for (std::size_t c = 0; c < chart.cols(); ++c) {
      const std::size_t i = chart.index(r, c);
      csv += format_g17(chart.tau_l.at(c)) + "," + format_g17(chart.tau_r.at(r)) + "," +
             std::to_string(chart.labels[i]) + "," + (chart.diverged[i] ? "1" : "0") + "," +
             format_g17(chart.lambda1[i]) + "\n";
    }
  }
  write_file(ctx.artifact(stem + ".csv"), csv);
}

int cmd_chart2p(const Options& o, Context& ctx) {
  const std::string mode = o.mode.empty() ? "truth" : o.mode;
  if (mode != "truth" && mode != "train-predict") throw UsageError("--mode must be truth or train-predict");
  if (!o.map.empty() && o.map != "bcb2d") throw UsageError("chart2p works on the bcb2d map only");
  const Bcb2DParams params = build_map(o, MapKind::Bcb2D).get<Bcb2DParams>();
  const auto [nl, nr] = parse_grid("grid", o.grid.empty() ? "100x100" : o.grid);
  const auto [ll, lh] = o.tau_l_range.empty() ? std::pair{-1.0, 3.0} : parse_range("tau-l-range", o.tau_l_range);
  const auto [rl, rh] = o.tau_r_range.empty() ? std::pair{-0.2, 1.0} : parse_range("tau-r-range", o.tau_r_range);
  const AxisSpec tl{ll, lh, nl};
  const AxisSpec tr{rl, rh, nr};
  tl.validate("--grid");
  tr.validate("--grid");
  const IterationConfig it = iteration(o, IterationConfig{});
  ctx.manifest.set("config.mode", mode);
  ctx.manifest.set("config.map", describe(MapInstance(params)));
  ctx.manifest.set("config.tau_l", format_short(ll) + ":" + format_short(lh) + ":" + std::to_string(nl));
  ctx.manifest.set("config.tau_r", format_short(rl) + ":" + format_short(rh) + ":" + std::to_string(nr));
  record_iteration(ctx.manifest, it);

  const ChartGrid truth = chart_2p(tl, tr, params, it, ctx.seed, ctx.workers);
  write_chart(ctx, "chart_truth", truth);
  std::size_t chaotic = 0;
  std::size_t diverged = 0;
  for (std::size_t i = 0; i < truth.labels.size(); ++i) {
    chaotic += truth.labels[i] == 1 ? 1 : 0;
    diverged += truth.diverged[i];
  }
  ctx.manifest.set("result.cells", truth.labels.size());
  ctx.manifest.set("result.chaotic", chaotic);
  ctx.manifest.set("result.diverged", diverged);
  ctx.out << truth.labels.size() << " cells: " << chaotic << " chaotic, " << diverged << " diverged\n";
  if (mode == "truth") return kOk;

  ChartPredictConfig cfg;
  if (!o.region.empty()) {
    const auto v = split_numbers("region", o.region, ':');
    if (v.size() != 4 || !(v[0] < v[1]) || !(v[2] < v[3])) throw UsageError("--region: expected tlo:thi:rlo:rhi");
    cfg.region = {v[0], v[1], v[2], v[3]};
  }
  cfg.holdout_fraction = opt_double("holdout", o.holdout, cfg.holdout_fraction);
  cfg.train.epochs = opt_size("epochs", o.epochs, cfg.train.epochs);
  cfg.train.lr = opt_double("lr", o.lr, cfg.train.lr);
  cfg.seed = ctx.seed;
  ctx.manifest.set("config.region", format_short(cfg.region.tau_l_lo) + ":" + format_short(cfg.region.tau_l_hi) + ":" +
                                        format_short(cfg.region.tau_r_lo) + ":" + format_short(cfg.region.tau_r_hi));
  ctx.manifest.set("config.holdout", cfg.holdout_fraction);
  ctx.manifest.set("config.epochs", cfg.train.epochs);
  const ChartPrediction pred = predict_chart(truth, cfg);
  write_chart(ctx, "chart_predicted", pred.predicted);
  write_report(ctx, "chart_report", pred.holdout);
  ctx.manifest.set("result.full_grid_agreement", pred.full_grid_agreement);
  ctx.out << "held-out accuracy " << format_short(pred.holdout.accuracy) << " on " << pred.holdout.n
          << " cells; full-grid agreement " << format_short(pred.full_grid_agreement) << "\n";
  return kOk;
}

int exit_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::IoError:
      return kIo;
    case ErrorCode::IncompatibleModel:
    case ErrorCode::ShapeMismatch:
      return kIncompatible;
    case ErrorCode::ParseError:
      return kParse;
    case ErrorCode::DivergedTraining:
    case ErrorCode::NonFiniteState:
      return kDiverged;
    default:
      return kFailure;
  }
}

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

std::vector<std::string> replay_args(const Manifest& m, const std::vector<std::string>& extra) {
  const auto command = m.get("command");
  if (!command) throw Error(ErrorCode::ParseError, "manifest has no 'command' entry");
  if (*command == "rerun") throw UsageError("cannot rerun a rerun manifest");
  std::vector<std::string> args{*command};
  for (const auto& [k, v] : m.entries()) {
    if (k.rfind("arg.", 0) == 0) {
      args.push_back("--" + k.substr(4));
      args.push_back(v);
    } else if (k.rfind("flag.", 0) == 0 && v == "true") {
      args.push_back("--" + k.substr(5));
    }
  }
  args.insert(args.end(), extra.begin(), extra.end());
  return args;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Piecewise-smooth map dynamics and classifiers", "pwsml"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  Options o;
  std::map<CLI::App*, Registry> registries;
  auto common = [&](CLI::App* sub) {
    Registry& reg = registries[sub];
    sub->add_option("--out", o.out, "Output directory (default: $PWSML_OUT_DIR or .)");
    sub->add_option("--workers", o.workers, "Worker threads; never changes output bytes");
    value(sub, reg, "seed", o.seed, "Base seed");
    value(sub, reg, "tol", o.tol, "Period detection tolerance");
    value(sub, reg, "transient", o.transient, "Transient iterations discarded");
    value(sub, reg, "iters", o.iters, "Iterations after the transient");
    value(sub, reg, "max-period", o.max_period, "Largest period searched");
    return &reg;
  };
  auto map_options = [&](CLI::App* sub, Registry& reg) {
    value(sub, reg, "map", o.map, "normal-form | tent | lozi | pws3d | bcb2d");
    for (std::size_t i = 0; i < kParamCount; ++i) {
      value(sub, reg, kParamFlags[i].first, o.params[i], std::string("Map parameter ") + kParamFlags[i].second);
    }
  };
  auto sweep_options = [&](CLI::App* sub, Registry& reg) {
    value(sub, reg, "param", o.param, "Swept parameter");
    value(sub, reg, "range", o.range, "lo:hi, inclusive");
    value(sub, reg, "points", o.points, "Grid points (default 1000)");
  };

  CLI::App* simulate = app.add_subcommand("simulate", "Iterate one map and write the orbit");
  {
    Registry& reg = *common(simulate);
    map_options(simulate, reg);
    value(simulate, reg, "x0", o.x0, "Initial state, comma separated");
  }
  CLI::App* sweep = app.add_subcommand("sweep", "One-parameter bifurcation scan");
  {
    Registry& reg = *common(sweep);
    map_options(sweep, reg);
    sweep_options(sweep, reg);
    value(sweep, reg, "samples", o.samples, "Attractor points kept per grid value (default 64)");
    flag(sweep, reg, "lyapunov", o.lyapunov, "Also compute Lyapunov spectra");
  }
  CLI::App* bcb = app.add_subcommand("detect-bcb", "Locate border-collision bifurcations");
  {
    Registry& reg = *common(bcb);
    map_options(bcb, reg);
    sweep_options(bcb, reg);
    value(bcb, reg, "period", o.period, "Cycle period whose border collisions are sought (default 1)");
    value(bcb, reg, "tol-param", o.tol_param, "Bisection width on the parameter (default 1e-12)");
  }
  CLI::App* gen = app.add_subcommand("gen-dataset", "Generate a labelled dataset");
  {
    Registry& reg = *common(gen);
    map_options(gen, reg);
    sweep_options(gen, reg);
    value(gen, reg, "family", o.family, "period | cobweb | lozi | pws3d");
    value(gen, reg, "samples", o.samples, "Samples for image and orbit families");
    value(gen, reg, "resolution", o.resolution, "Image side in pixels (default 64)");
    value(gen, reg, "window", o.window, "Orbit window length for pws3d (default 64)");
    value(gen, reg, "save-images", o.save_images, "Also write the first N images as PGM");
    value(gen, reg, "name", o.name, "Output CSV file name");
  }
  CLI::App* train = app.add_subcommand("train", "Train a classifier on a CSV dataset");
  {
    Registry& reg = *common(train);
    value(train, reg, "model", o.model, "dtc | rf | knn | logreg | svm | mlp | cnn");
    value(train, reg, "dataset", o.dataset, "CSV dataset");
    value(train, reg, "test-fraction", o.test_fraction, "Held-out fraction (default 0.2)");
    value(train, reg, "max-depth", o.max_depth, "Tree depth cap");
    value(train, reg, "min-leaf", o.min_leaf, "Minimum rows per leaf");
    value(train, reg, "trees", o.trees, "Forest size (default 100)");
    value(train, reg, "k", o.k, "Neighbours (default 5)");
    value(train, reg, "epochs", o.epochs, "Training epochs");
    value(train, reg, "lr", o.lr, "Learning rate");
    value(train, reg, "reg", o.reg, "SVM L2 penalty (default 1e-4)");
    value(train, reg, "batch-size", o.batch_size, "Mini-batch size (default 32)");
    value(train, reg, "dropout", o.dropout, "MLP dropout rate (default 0.2)");
    value(train, reg, "n-out", o.n_out, "Network outputs (mlp 4, cnn 2)");
    value(train, reg, "image-size", o.image_size, "WxH for cnn input (default: square)");
    value(train, reg, "name", o.name, "Stem for model and report files");
  }
  CLI::App* evaluate = app.add_subcommand("evaluate", "Score a saved model on a CSV dataset");
  {
    Registry& reg = *common(evaluate);
    value(evaluate, reg, "model", o.model, "Saved model file");
    value(evaluate, reg, "dataset", o.dataset, "CSV dataset");
    value(evaluate, reg, "test-fraction", o.test_fraction, "Score only the held-out part of this split");
    value(evaluate, reg, "name", o.name, "Stem for report files");
  }
  CLI::App* chart = app.add_subcommand("chart2p", "Two-parameter regular/chaotic chart of the 2D normal form");
  {
    Registry& reg = *common(chart);
    map_options(chart, reg);
    value(chart, reg, "mode", o.mode, "truth | train-predict");
    value(chart, reg, "grid", o.grid, "tau_L points x tau_R points (default 100x100)");
    value(chart, reg, "tau-l-range", o.tau_l_range, "lo:hi (default -1:3)");
    value(chart, reg, "tau-r-range", o.tau_r_range, "lo:hi (default -0.2:1)");
    value(chart, reg, "region", o.region, "Training region tlo:thi:rlo:rhi (default 0:2:0.6:1)");
    value(chart, reg, "holdout", o.holdout, "Held-out fraction of the region (default 0.2)");
    value(chart, reg, "epochs", o.epochs, "MLP epochs (default 1000)");
    value(chart, reg, "lr", o.lr, "Adam learning rate (default 1e-3)");
  }
  CLI::App* rerun = app.add_subcommand("rerun", "Repeat the run recorded in a manifest");
  rerun->add_option("--manifest", o.manifest, "Manifest written by an earlier run")->required();
  rerun->add_option("--out", o.out, "Output directory");
  rerun->add_option("--workers", o.workers, "Worker threads");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    err << "error: code=Usage message=" << one_line(e.what()) << "\n";
    return kUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  try {
    if (sub == rerun) {
      const Manifest m = Manifest::read(o.manifest);
      std::vector<std::string> extra;
      if (!o.out.empty()) extra.insert(extra.end(), {"--out", o.out});
      if (!o.workers.empty()) extra.insert(extra.end(), {"--workers", o.workers});
      return run(replay_args(m, extra), out, err);
    }

    const char* env = std::getenv(kOutDirEnv);
    Context ctx{o.out.empty() ? fs::path(env != nullptr && *env != '\0' ? env : ".") : fs::path(o.out), out, {}, 1, 0, {}};
    ctx.workers = opt_size("workers", o.workers, 1);
    if (ctx.workers == 0) throw UsageError("--workers must be positive");
    ctx.seed = opt_size("seed", o.seed, 0);
    std::error_code ec;
    fs::create_directories(ctx.dir, ec);
    if (ec || !fs::is_directory(ctx.dir)) {
      throw Error(ErrorCode::IoError, "cannot create output directory '" + ctx.dir.string() + "'");
    }

    ctx.manifest.set("tool", "pwsml");
    ctx.manifest.set("tool_version", kToolVersion);
    ctx.manifest.set("format_version", kFormatVersion);
    ctx.manifest.set("command", sub->get_name());
    const Registry& reg = registries[sub];
    for (const auto& [name, target] : reg.values) {
      if (!target->empty()) ctx.manifest.set("arg." + name, *target);
    }
    for (const auto& [name, target] : reg.flags) {
      if (*target) ctx.manifest.set("flag." + name, true);
    }
    ctx.manifest.set("config.seed", static_cast<unsigned long long>(ctx.seed));

    int code = kOk;
    if (sub == simulate) code = cmd_simulate(o, ctx);
    else if (sub == sweep) code = cmd_sweep(o, ctx);
    else if (sub == bcb) code = cmd_detect_bcb(o, ctx);
    else if (sub == gen) code = cmd_gen_dataset(o, ctx);
    else if (sub == train) code = cmd_train(o, ctx);
    else if (sub == evaluate) code = cmd_evaluate(o, ctx);
    else if (sub == chart) code = cmd_chart2p(o, ctx);

    for (std::size_t i = 0; i < ctx.artifacts.size(); ++i) ctx.manifest.set("artifact." + std::to_string(i), ctx.artifacts[i]);
    const std::string manifest_name = sub->get_name() + ".manifest";
    ctx.manifest.write((ctx.dir / manifest_name).string());
    out << "manifest " << (ctx.dir / manifest_name).string() << "\n";
    return code;
  } catch (const UsageError& e) {
    err << "error: code=Usage message=" << one_line(e.what()) << "\n";
    return kUsage;
  } catch (const Error& e) {
    err << "error: code=" << to_string(e.code()) << " message=" << one_line(e.what()) << "\n";
    return exit_for(e.code());
  } catch (const fs::filesystem_error& e) {
    err << "error: code=IoError message=" << one_line(e.what()) << "\n";
    return kIo;
  } catch (const std::exception& e) {
    err << "error: code=Internal message=" << one_line(e.what()) << "\n";
    return kFailure;
  }
}

}  // namespace pwsml::cli
