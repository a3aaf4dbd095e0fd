#pragma once

#include "gmt/common.hpp"

#include <span>

namespace gmt {

/// Exact kd-tree over a column-major point set with median splits.
/// The tree keeps a reference to the points; they must outlive it.
class KdTree {
 public:
  KdTree() = default;
  explicit KdTree(const PointMatrix* points, std::size_t leaf_size = 16);

  std::size_t size() const { return perm_.size(); }

  /// Indices with |p - center| < radius (strict), unordered.
  void radius_query(const Vec& center, double radius, std::vector<std::size_t>& out) const;

  /// Index of a nearest point and its distance. Requires a non-empty tree.
  std::pair<std::size_t, double> nearest(const Vec& query) const;

  /// Nearest distance when it exceeds `floor`; otherwise some value <= floor
  /// (the search stops at the first point within floor).
  double nearest_distance_above(const Vec& query, double floor) const;

 private:
  struct Node {
    std::size_t begin = 0, end = 0;
    int axis = -1;
    double split = 0.0;
    int left = -1, right = -1;
  };

  int build(std::size_t begin, std::size_t end);
  double box_distance_sq(std::size_t node, const double* q) const;

  const PointMatrix* points_ = nullptr;
  std::size_t leaf_size_ = 16;
  int dim_ = 0;
  std::vector<std::size_t> perm_;
  std::vector<Node> nodes_;
  std::vector<double> boxes_;   // lo then hi, 2 * dim per node
  std::vector<double> coords_;  // points in tree order, dim per point
};

}  // namespace gmt
