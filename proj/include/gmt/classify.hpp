#pragma once

#include "gmt/flatness.hpp"
#include "gmt/measure.hpp"
#include "gmt/metric_field.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace gmt {

enum class KpLabel { Plane, LightCone, Unknown };
const char* to_string(KpLabel label);

/// Registration maps data to model coordinates by u = rotation (p - translation).
struct KpVerdict {
  KpLabel label = KpLabel::Unknown;
  Mat rotation;
  Vec translation;
  /// Hausdorff distance to the model inside the unit ball after registration
  /// (infinite when no model was registered).
  double residual = 0.0;
  /// Flatness functional at the chosen center.
  double flatness = 0.0;

  nlohmann::json to_json() const;
};

/// Acceptance radius for a registered model.
inline constexpr double kKpAcceptance = 0.05;
/// Flatness functional level below which the data counts as a plane.
inline constexpr double kKpPlaneLevel = 1e-4;

/// Plane / light cone / unknown at unit scale. The center is 0 when 0 is a
/// support point, otherwise the support point nearest the centroid. Cone
/// registration is attempted for n = 3 in R^4.
KpVerdict kp_classify(const DiscreteMeasure& nu, int n);

/// Distance between cone and 3-plane inside B(0,1) for the plane with this
/// unit normal in R^4. Cone side is exact; the plane side is a maximum over
/// `directions` unit vectors of the plane.
double cone_plane_distance(const Vec& normal, std::size_t directions = 2000);

struct ConeGap {
  double minimum = 0.0;
  Vec argmin_normal;
  /// The plane x4 = 0.
  double witness = 0.0;
  /// Smallest value over planes containing the x4 axis.
  double axis_planes = 0.0;
  std::size_t planes = 0;

  nlohmann::json to_json() const;
};

/// Minimum over a resolution^2 grid of plane normals, refined locally.
ConeGap cone_plane_gap(int resolution = 32);

enum class Verdict { regular, singular, inconclusive };
const char* to_string(Verdict v);

struct PointClassification {
  Vec point;
  std::vector<double> scales;  // ascending
  std::vector<double> bbeta_values;
  Verdict verdict = Verdict::inconclusive;
  double threshold = 0.35;

  nlohmann::json to_json() const;
};

/// Support points spread by farthest-point order whose ball B(X, radius) is
/// balanced (centroid within radius/10 of X); boundary points of truncated
/// data fail that test. Returns at most `count` columns.
PointMatrix interior_centers(const DiscreteMeasure& mu, std::size_t count, double radius);

/// bbeta profile rule over the smallest third of the scales. The anisotropic
/// coefficient is used when a non-identity field is given. Centers are
/// snapped to the support.
std::vector<PointClassification> regular_singular_partition(const DiscreteMeasure& mu, const MetricField* field,
                                                            const PointMatrix& centers,
                                                            const std::vector<double>& scales, int n,
                                                            double threshold = 0.35);

/// Partition summary as CSV (verdict,count).
std::string partition_summary_csv(const std::vector<PointClassification>& rows);

struct PropagationRecord {
  Vec center;
  double r = 0.0;
  int N = 0;
  double eps1 = 0.0;
  double delta0 = 0.0;
  /// beta2 at radius 2^k r, k = 1..N.
  std::vector<double> dilates;
  bool hypothesis_met = false;
  double beta2_ball = 0.0;
  bool pass = true;
  /// max beta2(B') / delta0 over the audited sub-balls.
  double worst_subball_ratio = 0.0;
  std::size_t subballs = 0;

  nlohmann::json to_json() const;
};

/// Instance check of "beta2(2^k B) <= eps1 for k = 1..N => beta2(B) <= delta0",
/// with sub-balls of radius r 2^-j (j = 1..3) centered in B(x, r/2).
PropagationRecord beta2_propagation_check(const DiscreteMeasure& mu, const Vec& x, double r, int N, double eps1,
                                          double delta0, int n);

struct PersistenceRecord {
  std::vector<Vec> y;
  std::vector<double> bbeta_values;
  double minimum = 0.0;
  bool persistent = false;
  double threshold = 0.35;

  nlohmann::json to_json() const;
};

/// Rescales mu at (X, r_k), follows Y_k = Lambda(X)^{-1} (X_k - X) / r_k and
/// evaluates bbeta of the rescaled support at Y_k at unit scale.
PersistenceRecord singularity_persistence(const DiscreteMeasure& mu, const MetricField* field, const Vec& x_limit,
                                          const PointMatrix& singular_points, const std::vector<double>& radii,
                                          int n, double threshold = 0.35);

}  // namespace gmt
