#pragma once

#include "gmt/measure.hpp"
#include "gmt/metric_field.hpp"

#include <json.hpp>

#include <limits>

namespace gmt {

/// mu pushed forward by Lambda(X0)^{-1}, so that the carried field is the
/// identity at Y0 = Lambda(X0)^{-1} X0.
struct TildeFrame {
  Vec x0;
  Vec y0;
  /// Lambda(X0)^{-1}.
  Mat forward;
  /// Lambda(X0).
  Mat backward;
  DiscreteMeasure tilde_measure;
  MetricField field;

  /// Lambda(X0)^{-1} Lambda(Lambda(X0) Y). Not symmetric in general.
  Mat tilde_field(const Vec& y) const;
};

/// X0 is snapped to the support (DomainError when it is off the support).
TildeFrame tilde_transform(const DiscreteMeasure& mu, const MetricField& field, const Vec& x0);

struct MomentData {
  double r = 0.0;
  int n = 0;
  Vec b;
  Mat Q;
  double trQ = 0.0;
  /// Mass of the tilde measure in B(Y0, r).
  double mass = 0.0;
  std::size_t points = 0;

  double quadratic(const Vec& v) const { return v.dot(Q * v); }
  nlohmann::json to_json() const;
};

/// b, Q and tr(Q) over the open ball B(Y0, r) of the tilde measure.
MomentData moments(const TildeFrame& frame, double r, int n);

struct ResidualOptions {
  /// Density decay exponent and Hoelder exponent of Lambda in the bound shape
  /// |Y - Y0|^3 / r + r^{2 + min(alpha, beta)}.
  double alpha = 1.0;
  double beta = 1.0;
};

struct ResidualRow {
  Vec y;
  double lhs;
  double bound_shape;
  double ratio;
};

struct ResidualTable {
  MomentData data;
  std::vector<ResidualRow> rows;
  /// max over rows of lhs / bound_shape.
  double fitted_constant = 0.0;
  /// lhs ~ residual_coefficient |Y - Y0|^residual_exponent, fitted over rows
  /// with |Y - Y0| >= r/8. NaN when fewer than three rows have lhs > 1e-14.
  double residual_exponent = std::numeric_limits<double>::quiet_NaN();
  double residual_coefficient = std::numeric_limits<double>::quiet_NaN();
  double trace_defect = 0.0;
  /// trace_defect / r^alpha.
  double trace_ratio = 0.0;

  nlohmann::json to_json() const;
  /// y_1..y_d,lhs,bound_shape,ratio
  std::string to_csv() const;
};

/// Support points of the tilde measure in B(Y0, r/2); at most `max_count`,
/// spread out by farthest-point sampling when there are more.
PointMatrix admissible_test_points(const TildeFrame& frame, double r, std::size_t max_count = 256);

/// Moment residuals 2<b, Y - Y0> + Q(Y - Y0) - |Y - Y0|^2 at each test
/// point. Test points must lie on the tilde support inside B(Y0, r/2).
ResidualTable moment_residuals(const TildeFrame& frame, double r, int n, const PointMatrix& test_points,
                               const ResidualOptions& opts = {});

}  // namespace gmt
