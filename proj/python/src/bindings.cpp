#include "pwsml/bifurcation.hpp"
#include "pwsml/cli.hpp"
#include "pwsml/dataset.hpp"
#include "pwsml/dynamics.hpp"
#include "pwsml/error.hpp"
#include "pwsml/maps.hpp"

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace pwsml;

namespace {

MapInstance default_map(MapKind kind) {
  switch (kind) {
    case MapKind::NormalForm1D: return MapInstance(NormalForm1DParams{});
    case MapKind::Tent: return MapInstance(TentParams{});
    case MapKind::Lozi: return MapInstance(LoziParams{});
    case MapKind::Pws3D: return MapInstance(Pws3DParams{});
    case MapKind::Bcb2D: break;
  }
  return MapInstance(Bcb2DParams{});
}

MapInstance make_map(const std::string& kind, const py::kwargs& params) {
  MapInstance m = default_map(parse_kind(kind));
  for (const auto& [k, v] : params) m = with_parameter(m, py::cast<std::string>(k), py::cast<double>(v));
  return m;
}

State to_state(const MapInstance& m, const std::vector<double>& x) {
  if (static_cast<int>(x.size()) != m.dim()) {
    throw Error(ErrorCode::ShapeMismatch,
                "state needs " + std::to_string(m.dim()) + " coordinates, got " + std::to_string(x.size()));
  }
  State s(m.dim());
  for (int i = 0; i < m.dim(); ++i) s[i] = x[static_cast<std::size_t>(i)];
  return s;
}

std::vector<double> from_state(const State& s) { return {s.data(), s.data() + s.size()}; }

py::array_t<double> orbit_array(const Orbit& orbit, int dim) {
  py::array_t<double> a({static_cast<py::ssize_t>(orbit.states.size()), static_cast<py::ssize_t>(dim)});
  auto v = a.mutable_unchecked<2>();
  for (std::size_t i = 0; i < orbit.states.size(); ++i)
    for (int d = 0; d < dim; ++d) v(static_cast<py::ssize_t>(i), d) = orbit.states[i][d];
  return a;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Piecewise-smooth maps, Lyapunov spectra and border-collision scans";

  static py::exception<Error> base(m, "PwsmlError", PyExc_RuntimeError);
  static py::exception<NonFiniteStateError> nonfinite(m, "NonFiniteStateError", base.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const NonFiniteStateError& e) {
      py::set_error(nonfinite, e.what());
    } catch (const Error& e) {
      py::set_error(base, e.what());
    }
  });

  py::class_<MapInstance>(m, "Map")
      .def(py::init(&make_map), py::arg("kind"))
      .def_property_readonly("kind", [](const MapInstance& map) { return std::string(kind_name(map.kind())); })
      .def_property_readonly("dim", &MapInstance::dim)
      .def("__getitem__", [](const MapInstance& map, const std::string& name) { return get_parameter(map, name); })
      .def("with_param", [](const MapInstance& map, const std::string& name, double v) { return with_parameter(map, name, v); })
      .def("step", [](const MapInstance& map, const std::vector<double>& x) { return from_state(step(map, to_state(map, x))); })
      .def("jacobian", [](const MapInstance& map, const std::vector<double>& x) {
        return Eigen::MatrixXd(jacobian(map, to_state(map, x)));
      })
      .def("border_distance", [](const MapInstance& map, const std::vector<double>& x) {
        return border_distance(map, to_state(map, x));
      })
      .def("__repr__", [](const MapInstance& map) { return "<Map " + describe(map) + ">"; });

  m.def("parameter_names", [](const std::string& kind) { return parameter_names(parse_kind(kind)); });

  m.def(
      "simulate",
      [](const MapInstance& map, const std::vector<double>& x0, std::size_t n_total, std::size_t n_transient) {
        return orbit_array(simulate(map, to_state(map, x0), n_total, n_transient), map.dim());
      },
      py::arg("map"), py::arg("x0"), py::arg("n_total"), py::arg("n_transient") = 0);

  m.def(
      "detect_period",
      [](const MapInstance& map, const std::vector<double>& x0, std::size_t max_period, double tol,
         std::size_t transient) -> std::optional<std::size_t> {
        return detect_period(map, to_state(map, x0), max_period, tol, transient).period;
      },
      py::arg("map"), py::arg("x0"), py::arg("max_period") = 32, py::arg("tol") = 1e-9, py::arg("transient") = 5000);

  m.def(
      "lyapunov_spectrum",
      [](const MapInstance& map, const std::vector<double>& x0, std::size_t iterations, std::size_t transient) {
        return lyapunov_spectrum(map, to_state(map, x0), iterations, transient).exponents;
      },
      py::arg("map"), py::arg("x0"), py::arg("iterations") = 10000, py::arg("transient") = 5000);

  m.def("classify", [](const std::vector<double>& exponents) { return static_cast<int>(classify_behavior(exponents)); },
        "0 regular, 1 chaotic, 2 hyperchaotic");

  m.def(
      "detect_bcb",
      [](const MapInstance& map, const std::string& param, double lo, double hi, std::size_t n, std::size_t period,
         double tol_param) {
        SweepSpec spec(map, param, AxisSpec{lo, hi, n});
        spec.iteration = IterationConfig::bcb_scan();
        py::list out;
        for (const BcbEvent& e : detect_bcb(spec, period, tol_param)) {
          py::dict d;
          d["param_star"] = e.param_star;
          d["grid_param"] = e.grid_param;
          d["bracket"] = py::make_tuple(e.bracket_lo, e.bracket_hi);
          d["period_before"] = e.period_before;
          d["period_after"] = e.period_after;
          d["residual"] = e.border_point_residual;
          d["refined"] = e.refined;
          d["itinerary"] = e.branch_sequence;
          out.append(d);
        }
        return out;
      },
      py::arg("map"), py::arg("param"), py::arg("lo"), py::arg("hi"), py::arg("n") = 1000, py::arg("period") = 1,
      py::arg("tol_param") = 1e-12);

  m.def(
      "chart_2p",
      [](std::pair<double, double> tau_l, std::pair<double, double> tau_r, std::size_t n_l, std::size_t n_r,
         std::uint64_t seed, std::size_t transient, std::size_t iterations, std::size_t workers) {
        IterationConfig cfg;
        cfg.transient = transient;
        cfg.iterations = iterations;
        const ChartGrid g = chart_2p(AxisSpec{tau_l.first, tau_l.second, n_l}, AxisSpec{tau_r.first, tau_r.second, n_r},
                                     Bcb2DParams{}, cfg, seed, workers);
        // -1 marks a diverging cell; row r is tau_R index r
        py::array_t<int> labels({static_cast<py::ssize_t>(n_r), static_cast<py::ssize_t>(n_l)});
        auto v = labels.mutable_unchecked<2>();
        for (std::size_t r = 0; r < n_r; ++r)
          for (std::size_t c = 0; c < n_l; ++c) {
            const std::size_t i = g.index(r, c);
            v(static_cast<py::ssize_t>(r), static_cast<py::ssize_t>(c)) = g.diverged[i] ? -1 : g.labels[i];
          }
        return labels;
      },
      py::arg("tau_l") = std::pair{-1.0, 3.0}, py::arg("tau_r") = std::pair{-0.2, 1.0}, py::arg("n_l") = 100,
      py::arg("n_r") = 100, py::arg("seed") = 0, py::arg("transient") = 5000, py::arg("iterations") = 10000,
      py::arg("workers") = 1);

  m.def(
      "read_csv",
      [](const std::string& path) {
        const Dataset ds = read_csv(path);
        return py::make_tuple(Eigen::MatrixXd(ds.features), ds.labels, ds.column_names);
      },
      "Returns (features, labels, column_names)");

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = cli::run(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      "Runs one pwsml subcommand; returns (exit_code, stdout, stderr)");
}
