#pragma once

#include <Eigen/Core>

#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace pwsml {

/// State vectors and Jacobians never exceed three dimensions, so they live on
/// the stack.
using State = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, 3, 1>;
using Jacobian = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, 3, 3>;

enum class MapKind { NormalForm1D, Tent, Lozi, Pws3D, Bcb2D };

enum class Branch { Left = 0, Right = 1 };

// x' = a x + mu (x <= 0), b x + mu + l (x > 0)
struct NormalForm1DParams {
  double a = 0.5;
  double b = 0.5;
  double l = -0.1;
  double mu = 0.0;
};

// x' = mu x (x <= 0.5), mu (1 - x) (x > 0.5)
struct TentParams {
  double mu = 1.5;
};

// (x, y)' = (1 - a|x| + y, b x)
struct LoziParams {
  double a = 1.68;
  double b = 0.5;
};

// X' = A X + mu (1, 0, 0), A = [[tau, 1, 0], [-sigma, 0, 1], [delta, 0, 0]]
// with (tau, sigma, delta) taken from the side of the first component.
struct Pws3DParams {
  double tau_l = -0.5;
  double sigma_l = 0.95;
  double delta_l = 0.2;
  double tau_r = 0.8;
  double sigma_r = -0.6;
  double delta_r = -1.0;
  double mu = 0.1;
};

// (x, y)' = (tau x + y + mu, -delta x) with side-matched tau, delta.
struct Bcb2DParams {
  double tau_l = 0.0;
  double tau_r = 0.0;
  double delta_l = 2.0;
  double delta_r = -0.2;
  double mu = -1.0;
};

using MapParams = std::variant<NormalForm1DParams, TentParams, LoziParams, Pws3DParams, Bcb2DParams>;

/// One of the five piecewise-linear maps together with its parameters.
/// Immutable; cheap to copy.
class MapInstance {
 public:
  explicit MapInstance(MapParams params);

  MapKind kind() const noexcept { return static_cast<MapKind>(params_.index()); }
  int dim() const noexcept;
  const MapParams& params() const noexcept { return params_; }

  template <class P>
  const P& get() const {
    return std::get<P>(params_);
  }

 private:
  MapParams params_;
};

/// Each branch of every supported map is affine: x' = jacobian * x + offset.
struct AffineBranch {
  Jacobian jacobian;
  State offset;
};

std::string_view kind_name(MapKind kind) noexcept;
/// Accepts the CLI spellings (normal-form, tent, lozi, pws3d, bcb2d).
MapKind parse_kind(std::string_view name);
int dim_of(MapKind kind) noexcept;

double border_location(const MapInstance& map) noexcept;

/// First component minus the border location; <= 0 selects the Left branch.
double border_distance(const MapInstance& map, const State& s);
Branch branch_index(const MapInstance& map, const State& s);

State step(const MapInstance& map, const State& s);
Jacobian jacobian(const MapInstance& map, const State& s);
AffineBranch affine_branch(const MapInstance& map, Branch branch);

/// Parameter names accepted by get_parameter/with_parameter, in a fixed order.
std::vector<std::string> parameter_names(MapKind kind);
double get_parameter(const MapInstance& map, std::string_view name);
MapInstance with_parameter(const MapInstance& map, std::string_view name, double value);

/// "tent mu=1.5" style echo used in file headers and manifests.
std::string describe(const MapInstance& map);

bool is_finite(const State& s) noexcept;

namespace detail {
// Unchecked kernels used by the orbit loops, which do their own finiteness
// checks so they can report the failing iteration.
Branch branch_raw(const MapInstance& map, const State& s) noexcept;
void step_raw(const MapInstance& map, const State& s, State& out) noexcept;
void jacobian_raw(const MapInstance& map, const State& s, Jacobian& out) noexcept;
}  // namespace detail

}  // namespace pwsml
