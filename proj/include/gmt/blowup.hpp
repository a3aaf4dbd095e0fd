#pragma once

#include "gmt/flatness.hpp"
#include "gmt/measure.hpp"
#include "gmt/metric_field.hpp"

#include <json.hpp>

#include <limits>

namespace gmt {

/// mu pushed forward by T_{X,r}(Z) = (Z - X)/r, or by Lambda(X)^{-1}(Z - X)/r
/// when anisotropic, with weights divided by the mass that lands in B(0, 1).
struct RescaledMeasure {
  Vec center;
  double r = 0.0;
  bool anisotropic = false;
  /// mu(B(X, r)) or mu(B_Lambda(X, r)), as counted on the mapped points.
  double normalizer = 0.0;
  DiscreteMeasure measure;
};

/// Throws DomainError when B(X, r) (resp. the ellipse) carries no mass.
RescaledMeasure rescale(const DiscreteMeasure& mu, const MetricField* field, const Vec& x, double r);

/// Rescaling at (X, r) followed by the Euclidean rescaling at (0, s), compared
/// point by point with the rescaling at (X, r s).
struct CompositionAudit {
  double max_point_error = 0.0;
  double max_weight_error = 0.0;
  /// F_1 between the two measures (exact LP).
  double f1 = 0.0;
};
CompositionAudit composition_audit(const DiscreteMeasure& mu, const MetricField* field, const Vec& x, double r,
                                   double s);

struct FrOptions {
  /// Above this many source (or sink) nodes both measures are moved onto
  /// shared farthest-point centers and the transport error is reported.
  std::size_t cap_per_side = 2000;
};

struct FrResult {
  double value = 0.0;
  /// Upper bound on |value - exact F_r| from quantization (0 when exact).
  double quantization_error = 0.0;
  /// Primal transport cost minus the value of the Lipschitz witness.
  double duality_gap = 0.0;
  long pivots = 0;
  std::size_t sources = 0;
  std::size_t sinks = 0;
  bool quantized = false;

  nlohmann::json to_json() const;
};

/// sup over non-negative 1-Lipschitz phi supported in B(0, r) of
/// |int phi d nu1 - int phi d nu2|, solved exactly as a transport problem.
FrResult fr_distance_detailed(const DiscreteMeasure& nu1, const DiscreteMeasure& nu2, double r,
                              const FrOptions& opts = {});
double fr_distance(const DiscreteMeasure& nu1, const DiscreteMeasure& nu2, double r, const FrOptions& opts = {});

struct FDistance {
  double value = 0.0;
  std::vector<double> terms;  // F_{2^k}, k = 1..k_max
  /// Bound on the omitted tail sum_{k > k_max}. Infinite when the total
  /// masses differ, since then F_{2^k} grows like 2^k |m1 - m2|.
  double truncation_bound = 0.0;
  double quantization_error = 0.0;

  nlohmann::json to_json() const;
};

FDistance f_distance(const DiscreteMeasure& nu1, const DiscreteMeasure& nu2, int k_max, const FrOptions& opts = {});

/// Frozen value of the flatness functional on the light cone rescaled at its
/// apex: (1/2) int_0^2 phi(u) u^4 du for the (1, 2) kernel (30-digit quadrature).
inline constexpr double kConeFlatnessBaseline = 0.8514022145956257;

struct FlatFunctionalResult {
  double value = 0.0;
  /// Minimizing m-plane through 0.
  Plane plane;
  KernelSpec kernel{1.0, 2.0};
  double unit_mass = 0.0;
};

/// min over m-planes P through 0 of sum_i w_i phi(|Z_i|) dist(Z_i, P)^2 / nu(B(0,1)).
/// Requires a support point within 1e-6 of 0 (PreconditionError otherwise).
FlatFunctionalResult flatness_functional(const DiscreteMeasure& nu, int m);

struct TrajectoryPoint {
  double R;
  double value;
};
/// F of the Euclidean rescalings nu_{0,R}.
std::vector<TrajectoryPoint> tangent_flatness_trajectory(const DiscreteMeasure& nu, int m,
                                                         const std::vector<double>& R_grid);

struct UniformityDefect {
  double c_fit = 0.0;
  double sup_defect = 0.0;
};
/// c_fit is the geometric mean of nu(B(X, r)) / r^m over centers x scales.
UniformityDefect uniformity_defect(const DiscreteMeasure& nu, const PointMatrix& centers,
                                   const std::vector<double>& scales, int m);

/// max over r of F_1 between nu restricted to B(0,1) and T_{0,r}[nu]
/// restricted to B(0,1), both normalized to unit mass.
struct ConicalityDefect {
  double value = 0.0;
  std::vector<double> per_scale;
  double quantization_error = 0.0;
};
ConicalityDefect conicality_defect(const DiscreteMeasure& nu, int m, const std::vector<double>& r_grid,
                                   const FrOptions& opts = {});

}  // namespace gmt
