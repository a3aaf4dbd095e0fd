#include "gmt/kdtree.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <numeric>

namespace gmt {

KdTree::KdTree(const PointMatrix* points, std::size_t leaf_size)
    : points_(points), leaf_size_(std::max<std::size_t>(1, leaf_size)), dim_(static_cast<int>(points->rows())) {
  perm_.resize(static_cast<std::size_t>(points_->cols()));
  std::iota(perm_.begin(), perm_.end(), std::size_t{0});
  if (perm_.empty()) return;
  nodes_.reserve(2 * perm_.size() / leaf_size_ + 2);
  boxes_.reserve(nodes_.capacity() * 2 * static_cast<std::size_t>(dim_));
  build(0, perm_.size());
  const auto d = static_cast<std::size_t>(dim_);
  coords_.resize(perm_.size() * d);
  for (std::size_t i = 0; i < perm_.size(); ++i)
    for (std::size_t a = 0; a < d; ++a)
      coords_[i * d + a] = (*points_)(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(perm_[i]));
}

int KdTree::build(std::size_t begin, std::size_t end) {
  const auto& pts = *points_;
  const int id = static_cast<int>(nodes_.size());
  nodes_.emplace_back();
  Vec lo = pts.col(static_cast<Eigen::Index>(perm_[begin]));
  Vec hi = lo;
  for (std::size_t i = begin + 1; i < end; ++i) {
    const auto p = pts.col(static_cast<Eigen::Index>(perm_[i]));
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  boxes_.insert(boxes_.end(), lo.data(), lo.data() + dim_);
  boxes_.insert(boxes_.end(), hi.data(), hi.data() + dim_);
  nodes_[id].begin = begin;
  nodes_[id].end = end;
  if (end - begin <= leaf_size_) return id;

  Eigen::Index axis = 0;
  (hi - lo).maxCoeff(&axis);
  if (hi(axis) - lo(axis) == 0.0) return id;  // all points coincide
  const std::size_t mid = begin + (end - begin) / 2;
  std::nth_element(perm_.begin() + static_cast<std::ptrdiff_t>(begin),
                   perm_.begin() + static_cast<std::ptrdiff_t>(mid),
                   perm_.begin() + static_cast<std::ptrdiff_t>(end), [&](std::size_t a, std::size_t b) {
                     const double va = pts(axis, static_cast<Eigen::Index>(a));
                     const double vb = pts(axis, static_cast<Eigen::Index>(b));
                     return va < vb || (va == vb && a < b);
                   });
  nodes_[id].axis = static_cast<int>(axis);
  nodes_[id].split = pts(axis, static_cast<Eigen::Index>(perm_[mid]));
  const int left = build(begin, mid);
  const int right = build(mid, end);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

double KdTree::box_distance_sq(std::size_t node, const double* q) const {
  const double* lo = boxes_.data() + node * 2 * static_cast<std::size_t>(dim_);
  const double* hi = lo + dim_;
  double s = 0.0;
  for (int a = 0; a < dim_; ++a) {
    const double e = std::max({lo[a] - q[a], 0.0, q[a] - hi[a]});
    s += e * e;
  }
  return s;
}

namespace {

double dist_sq(const double* p, const double* q, int d) {
  double s = 0.0;
  for (int a = 0; a < d; ++a) {
    const double e = p[a] - q[a];
    s += e * e;
  }
  return s;
}

}  // namespace

void KdTree::radius_query(const Vec& center, double radius, std::vector<std::size_t>& out) const {
  out.clear();
  if (nodes_.empty() || !(radius > 0.0)) return;
  const double r2 = radius * radius;
  const double* q = center.data();
  std::vector<int> stack{0};
  while (!stack.empty()) {
    const auto id = static_cast<std::size_t>(stack.back());
    stack.pop_back();
    if (box_distance_sq(id, q) >= r2) continue;
    const Node& node = nodes_[id];
    if (node.left < 0) {
      for (std::size_t i = node.begin; i < node.end; ++i)
        if (dist_sq(coords_.data() + i * static_cast<std::size_t>(dim_), q, dim_) < r2) out.push_back(perm_[i]);
      continue;
    }
    stack.push_back(node.left);
    stack.push_back(node.right);
  }
}

std::pair<std::size_t, double> KdTree::nearest(const Vec& query) const {
  if (nodes_.empty()) throw DomainError("KdTree::nearest: empty tree");
  const double* q = query.data();
  double best2 = std::numeric_limits<double>::infinity();
  std::size_t best = perm_.front();
  // Depth is logarithmic in the size (median splits), so a small fixed stack suffices.
  std::array<std::pair<int, double>, 256> stack;
  std::size_t top = 0;
  stack[top++] = {0, box_distance_sq(0, q)};
  while (top > 0) {
    const auto [id, bound] = stack[--top];
    if (bound > best2) continue;
    const Node& node = nodes_[static_cast<std::size_t>(id)];
    if (node.left < 0) {
      for (std::size_t i = node.begin; i < node.end; ++i) {
        const double d2 = dist_sq(coords_.data() + i * static_cast<std::size_t>(dim_), q, dim_);
        const std::size_t idx = perm_[i];
        if (d2 < best2 || (d2 == best2 && idx < best)) {
          best2 = d2;
          best = idx;
        }
      }
      continue;
    }
    // Visit the nearer child first (pushed last).
    const bool go_left = q[node.axis] < node.split;
    const int near = go_left ? node.left : node.right, far = go_left ? node.right : node.left;
    const double bf = box_distance_sq(static_cast<std::size_t>(far), q);
    if (bf <= best2) stack[top++] = {far, bf};
    stack[top++] = {near, box_distance_sq(static_cast<std::size_t>(near), q)};
  }
  return {best, std::sqrt(best2)};
}

double KdTree::nearest_distance_above(const Vec& query, double floor) const {
  if (nodes_.empty()) throw DomainError("KdTree::nearest: empty tree");
  const double* q = query.data();
  const double floor2 = floor > 0.0 ? floor * floor : 0.0;
  double best2 = std::numeric_limits<double>::infinity();
  std::array<std::pair<int, double>, 256> stack;
  std::size_t top = 0;
  stack[top++] = {0, box_distance_sq(0, q)};
  while (top > 0) {
    const auto [id, bound] = stack[--top];
    if (bound >= best2) continue;
    const Node& node = nodes_[static_cast<std::size_t>(id)];
    if (node.left < 0) {
      for (std::size_t i = node.begin; i < node.end; ++i) {
        best2 = std::min(best2, dist_sq(coords_.data() + i * static_cast<std::size_t>(dim_), q, dim_));
        if (best2 <= floor2) return std::sqrt(best2);
      }
      continue;
    }
    const bool go_left = q[node.axis] < node.split;
    const int near = go_left ? node.left : node.right, far = go_left ? node.right : node.left;
    const double bf = box_distance_sq(static_cast<std::size_t>(far), q);
    if (bf < best2) stack[top++] = {far, bf};
    stack[top++] = {near, box_distance_sq(static_cast<std::size_t>(near), q)};
  }
  return std::sqrt(best2);
}

}  // namespace gmt
