#pragma once

#include "gmt/common.hpp"
#include "gmt/kdtree.hpp"
#include "gmt/metric_field.hpp"

#include <filesystem>
#include <memory>

namespace gmt {

/// A finite Radon measure given by positive point masses, with an exact
/// spatial index. Immutable; copies share storage.
class DiscreteMeasure {
 public:
  DiscreteMeasure() = default;
  /// Throws InputError on dimension mismatch, non-finite coordinates or
  /// non-positive weights.
  DiscreteMeasure(PointMatrix points, Vec weights);

  int dim() const { return data_ ? static_cast<int>(data_->points.rows()) : 0; }
  std::size_t size() const { return data_ ? static_cast<std::size_t>(data_->points.cols()) : 0; }
  bool empty() const { return size() == 0; }
  const PointMatrix& points() const { return data_->points; }
  const Vec& weights() const { return data_->weights; }
  double total_mass() const { return data_ ? data_->total_mass : 0.0; }
  Vec point(std::size_t i) const { return data_->points.col(static_cast<Eigen::Index>(i)); }

  /// Indices of points in the open ball, unordered.
  std::vector<std::size_t> indices_in_ball(const Vec& x, double r) const;
  /// Indices of points with |A^{-1}(p - x)| < r for the SPD matrix A.
  std::vector<std::size_t> indices_in_ellipse(const SpdMatrix& shape, const Vec& x, double r) const;

  double ball_mass(const Vec& x, double r) const;
  double ellipse_mass(const MetricField& field, const Vec& x, double r) const;
  double mass_of(const std::vector<std::size_t>& idx) const;

  /// Support points in the open ball sorted by distance to x, ties by index.
  std::vector<std::size_t> support_in(const Vec& x, double r) const;

  std::pair<std::size_t, double> nearest(const Vec& x) const;
  /// Index of the support point within `tol` of x; DomainError otherwise.
  std::size_t snap(const Vec& x, double tol = 1e-9) const;

  /// Points p -> A p + shift, weights scaled by mass_scale.
  DiscreteMeasure pushforward_affine(const Mat& a, const Vec& shift, double mass_scale) const;
  DiscreteMeasure with_weights(Vec weights) const;
  DiscreteMeasure subset(const std::vector<std::size_t>& idx) const;

  /// Largest coordinate-box diagonal of the support.
  double diameter_bound() const;

 private:
  struct Data {
    PointMatrix points;
    Vec weights;
    double total_mass = 0.0;
    KdTree index;
  };
  std::shared_ptr<const Data> data_;

  void require_query(const Vec& x, double r, const char* what) const;
};

/// Greedy farthest-point selection of `count` columns of `points`, starting
/// from column `first`. `owner`, when given, receives for every column the
/// position (in the returned list) of its nearest selected column and
/// `owner_distance` the distance to it.
std::vector<std::size_t> farthest_point_sample(const PointMatrix& points, std::size_t count, std::size_t first = 0,
                                               std::vector<std::size_t>* owner = nullptr,
                                               std::vector<double>* owner_distance = nullptr);

/// CSV with header `x0,...,x{d-1},weight`. Weights must be positive.
DiscreteMeasure read_measure_csv(const std::filesystem::path& path);
void write_measure_csv(const std::filesystem::path& path, const DiscreteMeasure& mu);

}  // namespace gmt
