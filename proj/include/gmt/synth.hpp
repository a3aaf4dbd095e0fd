#pragma once

#include "gmt/measure.hpp"
#include "gmt/metric_field.hpp"

#include <json.hpp>

#include <memory>
#include <optional>
#include <variant>

namespace gmt::synth {

/// Flat n-plane {x_n = ... = x_{d-1} = 0}, lattice of cell centres over
/// [-extent/2, extent/2]^n.
struct PlaneSpec {
  int n = 2;
  int ambient_dim = 3;
  double extent = 2.0;
};

/// Round sphere of the given radius centred at the origin in R^3 (or circle
/// in R^2). With cap_angle < pi only the polar cap around +x_{d-1} is sampled.
///
/// polar_rings (R^3 only) replaces the Fibonacci lattice by equal-area rings
/// around the pole with three equally spaced points each, plus the pole itself
/// at 1e-3 of a regular weight. Linear and quadratic moments centred at the
/// pole are then integrated exactly in the azimuth.
struct SphereSpec {
  double radius = 1.0;
  int ambient_dim = 3;
  double cap_angle = std::numbers::pi;
  bool polar_rings = false;
};

/// Light cone {x4^2 = x1^2 + x2^2 + x3^2} in R^4 with |(x1,x2,x3)| in
/// [inner_extent, extent]. When inner_extent = 0 the apex is a sample point
/// carrying 1e-3 of a regular sample weight.
struct ConeSpec {
  double extent = 1.0;
  double inner_extent = 0.0;
};

/// Graph of f(x) = (A/M) sum_j 4^{-j(1+gamma)} sum_m sin(4^j <k_jm, x> + phase_jm)
/// over [-extent/2, extent/2]^2 in R^3, with M directions k_jm per octave
/// spread evenly from a random offset. The gradient of f is gamma-Hoelder.
struct HolderGraphSpec {
  double gamma = 0.5;
  double amplitude = 0.1;
  double extent = 1.0;
  int octaves = 5;
  std::uint64_t seed = 1;
  int modes_per_octave = 3;
};

/// {x3 = 0} union {x2 = 0} in R^3, crossing along the x1 axis. Lattice with
/// the crossing line included.
struct CrossingPlanesSpec {
  double extent = 2.0;
};

struct SurfaceSpec;

/// Push-forward of the inner sample by Z -> matrix * Z + shift (weights kept).
struct AffineImageSpec {
  std::shared_ptr<const SurfaceSpec> inner;
  Mat matrix;
  Vec shift;
};

/// Multiplies sample weights by 1 + amplitude * |p - center|^exponent.
struct RadialPowerDensity {
  Vec center;
  double amplitude;
  double exponent;
};
/// Multiplies sample weights by 1 + amplitude * sin(frequency * x_axis).
struct SineDensity {
  double amplitude;
  double frequency;
  int axis;
};
using DensityModulation = std::variant<std::monostate, RadialPowerDensity, SineDensity>;

struct SurfaceSpec {
  std::variant<PlaneSpec, SphereSpec, ConeSpec, HolderGraphSpec, CrossingPlanesSpec, AffineImageSpec> kind;
  std::size_t samples = 100000;
  double weight_scale = 1.0;
  DensityModulation density;

  /// Ambient dimension of the generated measure.
  int ambient_dim() const;
  /// Dimension of the sampled surface.
  int surface_dim() const;

  nlohmann::json to_json() const;
  static SurfaceSpec from_json(const nlohmann::json& j);
};

/// Deterministic area-weighted sample of the surface.
DiscreteMeasure sample(const SurfaceSpec& spec);

/// Exact H^m mass of B(X, r) intersected with the surface, when a closed form
/// is available (plane anywhere inside the sampled window, cone at the apex,
/// sphere from a point on it). Density modulations disable the oracle.
std::optional<double> analytic_mass(const SurfaceSpec& spec, const Vec& x, double r);

/// Total surface area of the sampled (truncated) model.
std::optional<double> analytic_total_mass(const SurfaceSpec& spec);

/// Field construction by kind name: identity, constant, sinusoidal, grid.
/// `params` carries the kind-specific payload of the field JSON format.
MetricField make_field(const std::string& kind, const nlohmann::json& params);

/// Value and gradient of the Hoelder graph height function.
struct GraphEval {
  double value;
  Eigen::Vector2d gradient;
};
GraphEval holder_graph_eval(const HolderGraphSpec& spec, const Eigen::Vector2d& x);

}  // namespace gmt::synth
