#pragma once

#include "gmt/measure.hpp"
#include "gmt/metric_field.hpp"

#include <json.hpp>

#include <limits>

namespace gmt {

/// Affine n-plane: base point plus orthonormal direction rows.
struct Plane {
  Vec base;
  /// n x d, orthonormal rows.
  Mat basis;
  /// Unit normal when the plane is a hyperplane, empty otherwise.
  Vec normal;

  /// Orthonormalizes the columns of `directions` (d x n). Throws
  /// DegenerateError when they are dependent.
  static Plane through(const Vec& base, const Mat& directions);
  /// Hyperplane through `base` with the given normal.
  static Plane with_normal(const Vec& base, const Vec& normal);

  int dim() const { return static_cast<int>(basis.rows()); }
  int ambient_dim() const { return static_cast<int>(basis.cols()); }
  Vec project(const Vec& p) const;
  double distance(const Vec& p) const;
  /// d x (d - n) orthonormal basis of the normal space.
  Mat complement() const;
};

/// phi(t) = 1 on [0, inner], psi((outer - t) / (outer - inner)) between, 0
/// from outer on, where psi is the smooth step exp(-1/u) / (exp(-1/u) + exp(-1/(1-u))).
struct KernelSpec {
  double inner = 2.0;
  double outer = 3.0;

  double operator()(double t) const;
  static double transition(double u);
  void validate() const;
};

/// Symmetric Hausdorff distance between two finite point sets (columns).
double hausdorff_distance(const PointMatrix& a, const PointMatrix& b);

/// Plane minimizing sum_i w_i phi(|p_i - X| / r) dist(p_i, P)^2, among affine
/// planes or, with through_center, planes containing X.
Plane fit_plane_weighted(const DiscreteMeasure& mu, const Vec& x, double r, const KernelSpec& kernel,
                         bool through_center, int n);

struct PlaneSearchOptions {
  int restarts = 3;
  int max_iterations = 200;
  /// Plane-side grid sizes during the search and for the reported value.
  std::size_t search_grid = 512;
  std::size_t final_grid = 4096;
  /// Support points scored during the search (strided); the reported value
  /// always uses every point. 0 means all.
  std::size_t search_points = 20000;
  std::uint64_t seed = 20240601;
};

struct BetaResult {
  double value = 0.0;
  /// Best plane found, through the center.
  Plane plane;
  /// Fill distance of the plane-side grid, in units of r (0 for one-sided beta).
  double grid_spacing = 0.0;
  std::size_t points = 0;
};

/// inf over n-planes through X of sup over support in B(X, r) of dist / r.
BetaResult beta_centered(const DiscreteMeasure& mu, const Vec& x, double r, int n,
                         const PlaneSearchOptions& opts = {});

/// inf over n-planes through X of D[spt mu cap B; P cap B] / r. B is the ball
/// B(X, r), or the ellipse B_Lambda(X, r) when a field is given.
BetaResult bbeta(const DiscreteMeasure& mu, const Vec& x, double r, int n, const MetricField* field = nullptr,
                 const PlaneSearchOptions& opts = {});

/// D[spt mu cap B; P cap B] for a fixed plane through X (not normalized).
double bilateral_distance(const DiscreteMeasure& mu, const Vec& x, double r, const Plane& plane,
                          const MetricField* field = nullptr, std::size_t grid = 4096);

/// Smooth L2 beta over affine planes with the (2, 3) kernel.
double beta2_smooth(const DiscreteMeasure& mu, const Vec& x, double r, int n, const KernelSpec& kernel = {});

struct ImplicationCheck {
  double hypothesis_lhs = 0.0;
  double hypothesis_rhs = 0.0;
  bool hypothesis_met = false;
  double conclusion_lhs = 0.0;
  double conclusion_rhs = 0.0;
  /// True unless the hypothesis holds and the conclusion fails.
  bool pass = true;
};

struct ComparisonRecord {
  double r_euclidean_outer = 0.0;  // lambda_max(K) r
  double r_euclidean_inner = 0.0;  // lambda_min(K) r
  /// Euclidean flat at lambda_max(K) r => anisotropic flat at r.
  ImplicationCheck euclidean_to_anisotropic;
  /// Anisotropic flat at r => Euclidean flat at lambda_min(K) r.
  ImplicationCheck anisotropic_to_euclidean;
  bool pass() const { return euclidean_to_anisotropic.pass && anisotropic_to_euclidean.pass; }
  bool any_hypothesis_met() const {
    return euclidean_to_anisotropic.hypothesis_met || anisotropic_to_euclidean.hypothesis_met;
  }
};

/// Evaluates both directions of the Euclidean/anisotropic flatness comparison
/// for a plane through X. Throws HypothesisError unless delta < delta_K.
ComparisonRecord flatness_comparison_check(const MetricField& field, const DiscreteMeasure& mu, const Vec& x,
                                           double r, const Plane& plane, double delta, const CompactBounds& bounds);

struct FlatnessProfile {
  Vec center;
  std::vector<double> scales;
  std::vector<double> beta;
  std::vector<double> bbeta;
  /// Empty when no field was given.
  std::vector<double> bbeta_aniso;
  std::vector<double> beta2;
  double gamma_fit = std::numeric_limits<double>::quiet_NaN();

  nlohmann::json to_json() const;
  /// Header plus one row per scale: scale,beta,bbeta,bbeta_aniso,beta2.
  std::string to_csv() const;
};

FlatnessProfile flatness_profile(const DiscreteMeasure& mu, const Vec& x, const std::vector<double>& scales, int n,
                                 const MetricField* field = nullptr, const PlaneSearchOptions& opts = {});

struct DecayFit {
  double gamma;
  double C;
};

/// log beta against log r. Needs three scales with beta > 1e-12.
DecayFit decay_fit(const std::vector<double>& scales, const std::vector<double>& beta);
DecayFit decay_fit(const FlatnessProfile& profile);

}  // namespace gmt
