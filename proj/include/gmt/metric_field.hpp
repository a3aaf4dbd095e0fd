#pragma once

#include "gmt/common.hpp"

#include <json.hpp>

#include <memory>
#include <optional>
#include <variant>

namespace gmt {

/// Symmetric positive definite matrix together with its spectral decomposition.
class SpdMatrix {
 public:
  /// Validates symmetry (|a_ij - a_ji| <= 1e-12), symmetrizes and checks that
  /// every eigenvalue is positive. Throws InputError otherwise.
  explicit SpdMatrix(const Mat& entries);

  static SpdMatrix identity(int dim);

  int dim() const { return static_cast<int>(entries_.rows()); }
  const Mat& entries() const { return entries_; }
  /// Ascending.
  const Vec& eigenvalues() const { return eigenvalues_; }
  /// Columns are orthonormal eigenvectors matching eigenvalues().
  const Mat& eigenvectors() const { return eigenvectors_; }

  double lambda_min() const { return eigenvalues_(0); }
  double lambda_max() const { return eigenvalues_(eigenvalues_.size() - 1); }

  Mat inverse() const;
  Vec solve(const Vec& v) const;

 private:
  SpdMatrix(Mat entries, Vec values, Mat vectors);

  Mat entries_;
  Vec eigenvalues_;
  Mat eigenvectors_;
};

/// Operator (spectral) norm of a symmetric matrix.
double sym_operator_norm(const Mat& m);

struct IdentityKind {};
struct ConstantKind {
  SpdMatrix matrix;
};
/// Lambda(X) = base + amplitude * sin(frequency * <wave, X>) * direction,
/// with |direction|_op <= 1 and amplitude < lambda_min(base).
struct SinusoidalKind {
  SpdMatrix base;
  double amplitude;
  Mat direction;
  double frequency;
  Vec wave;
};
enum class GridInterpolation { nearest, multilinear };
/// Regular grid of SPD samples. Sample index is row-major over `counts`
/// (last axis fastest).
struct GridKind {
  Vec origin;
  double spacing;
  std::vector<int> counts;
  std::vector<SpdMatrix> samples;
  GridInterpolation interpolation;
};

class MetricField;
/// Lambda'(X) = R Lambda(R^T (X - shift)) R^T: the field carried along by the
/// rigid motion X -> R X + shift.
struct RigidKind {
  std::shared_ptr<const MetricField> inner;
  Mat rotation;
  Vec shift;
};

using FieldKind = std::variant<IdentityKind, ConstantKind, SinusoidalKind, GridKind, RigidKind>;

/// The anisotropy field X -> Lambda(X). Immutable after construction.
class MetricField {
 public:
  MetricField(int ambient_dim, FieldKind kind, double holder_exponent);

  static MetricField identity(int ambient_dim, double holder_exponent = 0.5);
  static MetricField constant(const Mat& m, double holder_exponent = 0.5);
  static MetricField sinusoidal(const Mat& base, double amplitude, const Mat& direction,
                                double frequency, double holder_exponent,
                                std::optional<Vec> wave = std::nullopt);

  int ambient_dim() const { return dim_; }
  double holder_exponent() const { return holder_exponent_; }
  const FieldKind& kind() const { return kind_; }
  bool is_identity() const { return std::holds_alternative<IdentityKind>(kind_); }
  /// True when Lambda does not depend on the point.
  bool is_constant() const;

  SpdMatrix eval(const Vec& x) const;

  /// The field transported by X -> rotation * X + shift.
  MetricField rigid_transformed(const Mat& rotation, const Vec& shift) const;

  nlohmann::json to_json() const;
  static MetricField from_json(const nlohmann::json& j);

 private:
  SpdMatrix eval_grid(const GridKind& g, const Vec& x) const;

  int dim_;
  FieldKind kind_;
  double holder_exponent_;
};

/// Axis-aligned box.
struct Box {
  Vec lo;
  Vec hi;
  double distance(const Vec& x) const;
  bool contains(const Vec& x) const { return distance(x) == 0.0; }
};

struct CompactBounds {
  double lambda_min_K;
  double lambda_max_K;
  double eccentricity;
  double delta_K;
  double m_K;
  double holder_constant;
  std::size_t points_used;

  static CompactBounds from_extremes(double lmin, double lmax, double holder);
};

/// Extreme eigenvalues of Lambda over the support points in the closed
/// `neighborhood` of K, plus a pairwise Hoelder-constant estimate over up to
/// `max_pairs` deterministic pairs.
CompactBounds compact_bounds(const MetricField& field, const PointMatrix& support, const Box& k,
                             double neighborhood = 1.0, std::size_t max_pairs = 10000,
                             std::uint64_t seed = 7);

/// |Lambda(X)^{-1}(Z - X)| < r. Open ellipse.
bool ellipse_contains(const MetricField& field, const Vec& x, double r, const Vec& z);

struct NestedRadii {
  double outer;
  std::optional<double> inner;
  double c_k;
};

/// Radii of the ellipses centred at Y that contain (outer) and are contained
/// in (inner) B_Lambda(X, r).
///
/// C_K = H_K * (lambda_min(K)^{-2} rho^{1+b} + lambda_min(K)^{-1} rho^b) with
/// rho = max(1, |X-Y|/r), which reduces to H_K (1 + 1/lambda_min(K)) when
/// lambda_min(K) = 1 and |X-Y| <= r.
NestedRadii nested_radii(const MetricField& field, const Vec& x, const Vec& y, double r,
                         const CompactBounds& bounds);

}  // namespace gmt
