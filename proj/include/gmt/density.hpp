#pragma once

#include "gmt/measure.hpp"
#include "gmt/metric_field.hpp"

#include <json.hpp>

namespace gmt {

/// Ratios mu(B_Lambda(X, r)) / (omega_n r^n) down a scale ladder, with the
/// power-law fit |ratio - 1| ~ C r^alpha.
struct DensityProfile {
  Vec center;
  std::vector<double> scales;
  std::vector<double> ratios;
  double fitted_alpha = std::numeric_limits<double>::quiet_NaN();
  double fitted_C = std::numeric_limits<double>::quiet_NaN();

  double sup_defect() const;
  nlohmann::json to_json() const;
};

/// X is snapped to the support first (tolerance 1e-9). Scales must be
/// strictly decreasing. When fewer than two scales carry a defect above
/// 1e-12 the fit fields stay NaN.
DensityProfile density_profile(const DiscreteMeasure& mu, const MetricField& field, const Vec& x,
                               const std::vector<double>& scales, int n);

struct DoublingDefect {
  Vec center;
  double r = 0.0;
  std::vector<double> t_grid;
  std::vector<double> defects;
  double sup_defect = 0.0;

  nlohmann::json to_json() const;
};

/// |mu(B_Lambda(X, t r)) / mu(B_Lambda(X, r)) - t^n| over the grid.
DoublingDefect doubling_defect(const DiscreteMeasure& mu, const MetricField& field, const Vec& x, double r,
                               const std::vector<double>& t_grid, int n);

/// Default grid: 17 evenly spaced values of t in [1/2, 1].
std::vector<double> default_t_grid();

struct ThetaEstimate {
  double theta = 0.0;
  int k_min = 0;
  int k_max = 0;
  /// l_k = log(mu(B_Lambda(X, 2^-k)) / (omega_n 2^-kn)) for k = k_min..k_max.
  std::vector<double> l_sequence;

  /// max |l_j - l_k| over the tail j, k >= k_from.
  double cauchy_spread(int k_from) const;
};

ThetaEstimate theta_lambda(const DiscreteMeasure& mu, const MetricField& field, const Vec& x, int n,
                           int k_min = 3, int k_max = 7);

struct NormalizeOptions {
  int k_min = 3;
  int k_max = 7;
  /// Theta is evaluated at up to this many points (every point when the
  /// measure is smaller) and carried to the rest by nearest neighbour.
  std::size_t max_evaluations = 2000;
};

/// mu_0: every weight divided by the local Theta_Lambda estimate.
DiscreteMeasure normalize_by_density(const DiscreteMeasure& mu, const MetricField& field, int n,
                                     const NormalizeOptions& opts = {});

}  // namespace gmt
