#include "pwsml/maps.hpp"

#include "pwsml/error.hpp"
#include "pwsml/format.hpp"

#include <cmath>

namespace pwsml {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require_valid(const MapInstance& map, const State& s) {
  if (s.size() != map.dim()) {
    throw Error(ErrorCode::ShapeMismatch, "state has " + std::to_string(s.size()) +
                                              " components, map " + std::string(kind_name(map.kind())) +
                                              " expects " + std::to_string(map.dim()));
  }
  if (!is_finite(s)) throw NonFiniteStateError(0, "NonFiniteState: input state is not finite");
}

double* param_slot(MapParams& params, std::string_view name) {
  return std::visit(
      Overloaded{
          [&](NormalForm1DParams& p) -> double* {
            if (name == "a") return &p.a;
            if (name == "b") return &p.b;
            if (name == "l") return &p.l;
            if (name == "mu") return &p.mu;
            return nullptr;
          },
          [&](TentParams& p) -> double* { return name == "mu" ? &p.mu : nullptr; },
          [&](LoziParams& p) -> double* {
            if (name == "a") return &p.a;
            if (name == "b") return &p.b;
            return nullptr;
          },
          [&](Pws3DParams& p) -> double* {
            if (name == "tau_l") return &p.tau_l;
            if (name == "sigma_l") return &p.sigma_l;
            if (name == "delta_l") return &p.delta_l;
            if (name == "tau_r") return &p.tau_r;
            if (name == "sigma_r") return &p.sigma_r;
            if (name == "delta_r") return &p.delta_r;
            if (name == "mu") return &p.mu;
            return nullptr;
          },
          [&](Bcb2DParams& p) -> double* {
            if (name == "tau_l") return &p.tau_l;
            if (name == "tau_r") return &p.tau_r;
            if (name == "delta_l") return &p.delta_l;
            if (name == "delta_r") return &p.delta_r;
            if (name == "mu") return &p.mu;
            return nullptr;
          },
      },
      params);
}

}  // namespace

MapInstance::MapInstance(MapParams params) : params_(params) {}

int MapInstance::dim() const noexcept { return dim_of(kind()); }

int dim_of(MapKind kind) noexcept {
  switch (kind) {
    case MapKind::NormalForm1D:
    case MapKind::Tent:
      return 1;
    case MapKind::Lozi:
    case MapKind::Bcb2D:
      return 2;
    case MapKind::Pws3D:
      return 3;
  }
  return 1;
}

std::string_view kind_name(MapKind kind) noexcept {
  switch (kind) {
    case MapKind::NormalForm1D:
      return "normal-form";
    case MapKind::Tent:
      return "tent";
    case MapKind::Lozi:
      return "lozi";
    case MapKind::Pws3D:
      return "pws3d";
    case MapKind::Bcb2D:
      return "bcb2d";
  }
  return "unknown";
}

MapKind parse_kind(std::string_view name) {
  if (name == "normal-form" || name == "normalform" || name == "nf") return MapKind::NormalForm1D;
  if (name == "tent") return MapKind::Tent;
  if (name == "lozi") return MapKind::Lozi;
  if (name == "pws3d") return MapKind::Pws3D;
  if (name == "bcb2d") return MapKind::Bcb2D;
  throw Error(ErrorCode::InvalidArgument, "unknown map '" + std::string(name) + "'");
}

double border_location(const MapInstance& map) noexcept { return map.kind() == MapKind::Tent ? 0.5 : 0.0; }

bool is_finite(const State& s) noexcept {
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (!std::isfinite(s[i])) return false;
  }
  return true;
}

double border_distance(const MapInstance& map, const State& s) {
  require_valid(map, s);
  return s[0] - border_location(map);
}

Branch branch_index(const MapInstance& map, const State& s) {
  require_valid(map, s);
  return detail::branch_raw(map, s);
}

State step(const MapInstance& map, const State& s) {
  require_valid(map, s);
  State out;
  detail::step_raw(map, s, out);
  if (!is_finite(out)) throw NonFiniteStateError(1, "NonFiniteState: step produced a non-finite state");
  return out;
}

Jacobian jacobian(const MapInstance& map, const State& s) {
  require_valid(map, s);
  Jacobian j;
  detail::jacobian_raw(map, s, j);
  return j;
}

AffineBranch affine_branch(const MapInstance& map, Branch branch) {
  const bool left = branch == Branch::Left;
  AffineBranch out;
  std::visit(
      Overloaded{
          [&](const NormalForm1DParams& p) {
            out.jacobian = Jacobian::Constant(1, 1, left ? p.a : p.b);
            out.offset = State::Constant(1, left ? p.mu : p.mu + p.l);
          },
          [&](const TentParams& p) {
            out.jacobian = Jacobian::Constant(1, 1, left ? p.mu : -p.mu);
            out.offset = State::Constant(1, left ? 0.0 : p.mu);
          },
          [&](const LoziParams& p) {
            // |x| = -x on the left (x <= 0), x on the right.
            out.jacobian.resize(2, 2);
            out.jacobian << (left ? p.a : -p.a), 1.0, p.b, 0.0;
            out.offset.resize(2);
            out.offset << 1.0, 0.0;
          },
          [&](const Pws3DParams& p) {
            out.jacobian.resize(3, 3);
            if (left) {
              out.jacobian << p.tau_l, 1.0, 0.0, -p.sigma_l, 0.0, 1.0, p.delta_l, 0.0, 0.0;
            } else {
              out.jacobian << p.tau_r, 1.0, 0.0, -p.sigma_r, 0.0, 1.0, p.delta_r, 0.0, 0.0;
            }
            out.offset.resize(3);
            out.offset << p.mu, 0.0, 0.0;
          },
          [&](const Bcb2DParams& p) {
            out.jacobian.resize(2, 2);
            out.jacobian << (left ? p.tau_l : p.tau_r), 1.0, -(left ? p.delta_l : p.delta_r), 0.0;
            out.offset.resize(2);
            out.offset << p.mu, 0.0;
          },
      },
      map.params());
  return out;
}

std::vector<std::string> parameter_names(MapKind kind) {
  switch (kind) {
    case MapKind::NormalForm1D:
      return {"a", "b", "l", "mu"};
    case MapKind::Tent:
      return {"mu"};
    case MapKind::Lozi:
      return {"a", "b"};
    case MapKind::Pws3D:
      return {"tau_l", "sigma_l", "delta_l", "tau_r", "sigma_r", "delta_r", "mu"};
    case MapKind::Bcb2D:
      return {"tau_l", "tau_r", "delta_l", "delta_r", "mu"};
  }
  return {};
}

double get_parameter(const MapInstance& map, std::string_view name) {
  MapParams copy = map.params();
  const double* slot = param_slot(copy, name);
  if (slot == nullptr) {
    throw Error(ErrorCode::InvalidArgument,
                "map " + std::string(kind_name(map.kind())) + " has no parameter '" + std::string(name) + "'");
  }
  return *slot;
}

MapInstance with_parameter(const MapInstance& map, std::string_view name, double value) {
  MapParams copy = map.params();
  double* slot = param_slot(copy, name);
  if (slot == nullptr) {
    throw Error(ErrorCode::InvalidArgument,
                "map " + std::string(kind_name(map.kind())) + " has no parameter '" + std::string(name) + "'");
  }
  if (!std::isfinite(value)) throw Error(ErrorCode::InvalidArgument, "parameter '" + std::string(name) + "' is not finite");
  *slot = value;
  return MapInstance(copy);
}

std::string describe(const MapInstance& map) {
  std::string out(kind_name(map.kind()));
  for (const auto& name : parameter_names(map.kind())) {
    out += ' ';
    out += name;
    out += '=';
    out += format_short(get_parameter(map, name));
  }
  return out;
}

namespace detail {

Branch branch_raw(const MapInstance& map, const State& s) noexcept {
  return s[0] - border_location(map) <= 0.0 ? Branch::Left : Branch::Right;
}

void step_raw(const MapInstance& map, const State& s, State& out) noexcept {
  const bool left = branch_raw(map, s) == Branch::Left;
  std::visit(
      Overloaded{
          [&](const NormalForm1DParams& p) {
            out.resize(1);
            out[0] = left ? p.a * s[0] + p.mu : p.b * s[0] + p.mu + p.l;
          },
          [&](const TentParams& p) {
            out.resize(1);
            out[0] = left ? p.mu * s[0] : p.mu * (1.0 - s[0]);
          },
          [&](const LoziParams& p) {
            out.resize(2);
            out[0] = 1.0 - p.a * std::abs(s[0]) + s[1];
            out[1] = p.b * s[0];
          },
          [&](const Pws3DParams& p) {
            const double tau = left ? p.tau_l : p.tau_r;
            const double sigma = left ? p.sigma_l : p.sigma_r;
            const double delta = left ? p.delta_l : p.delta_r;
            out.resize(3);
            out[0] = tau * s[0] + s[1] + p.mu;
            out[1] = -sigma * s[0] + s[2];
            out[2] = delta * s[0];
          },
          [&](const Bcb2DParams& p) {
            const double tau = left ? p.tau_l : p.tau_r;
            const double delta = left ? p.delta_l : p.delta_r;
            out.resize(2);
            out[0] = tau * s[0] + s[1] + p.mu;
            out[1] = -delta * s[0];
          },
      },
      map.params());
}

void jacobian_raw(const MapInstance& map, const State& s, Jacobian& out) noexcept {
  const bool left = branch_raw(map, s) == Branch::Left;
  std::visit(
      Overloaded{
          [&](const NormalForm1DParams& p) { out = Jacobian::Constant(1, 1, left ? p.a : p.b); },
          [&](const TentParams& p) { out = Jacobian::Constant(1, 1, left ? p.mu : -p.mu); },
          [&](const LoziParams& p) {
            // sgn(0) is taken as -1 so the border uses the left derivative.
            const double sgn = left ? -1.0 : 1.0;
            out.resize(2, 2);
            out << -p.a * sgn, 1.0, p.b, 0.0;
          },
          [&](const Pws3DParams& p) {
            out.resize(3, 3);
            if (left) {
              out << p.tau_l, 1.0, 0.0, -p.sigma_l, 0.0, 1.0, p.delta_l, 0.0, 0.0;
            } else {
              out << p.tau_r, 1.0, 0.0, -p.sigma_r, 0.0, 1.0, p.delta_r, 0.0, 0.0;
            }
          },
          [&](const Bcb2DParams& p) {
            out.resize(2, 2);
            out << (left ? p.tau_l : p.tau_r), 1.0, -(left ? p.delta_l : p.delta_r), 0.0;
          },
      },
      map.params());
}

}  // namespace detail

}  // namespace pwsml
