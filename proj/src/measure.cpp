#include "gmt/measure.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace gmt {

DiscreteMeasure::DiscreteMeasure(PointMatrix points, Vec weights) {
  if (points.cols() != weights.size())
    throw InputError("DiscreteMeasure: point and weight counts differ");
  if (points.cols() > 0 && points.rows() < 1) throw InputError("DiscreteMeasure: zero dimension");
  if (!points.allFinite()) throw InputError("DiscreteMeasure: non-finite coordinates");
  for (Eigen::Index i = 0; i < weights.size(); ++i)
    if (!(weights(i) > 0.0) || !std::isfinite(weights(i)))
      throw InputError("DiscreteMeasure: weights must be positive (index " + std::to_string(i) + ")");
  auto data = std::make_shared<Data>();
  data->points = std::move(points);
  data->weights = std::move(weights);
  data->total_mass = data->weights.sum();
  data->index = KdTree(&data->points);
  data_ = std::move(data);
}

void DiscreteMeasure::require_query(const Vec& x, double r, const char* what) const {
  require_positive_radius(r, what);
  if (!data_) return;
  if (x.size() != dim()) throw InputError(std::string(what) + ": dimension mismatch");
  if (!x.allFinite()) throw InputError(std::string(what) + ": non-finite center");
}

std::vector<std::size_t> DiscreteMeasure::indices_in_ball(const Vec& x, double r) const {
  require_query(x, r, "ball query");
  std::vector<std::size_t> out;
  if (data_) data_->index.radius_query(x, r, out);
  return out;
}

std::vector<std::size_t> DiscreteMeasure::indices_in_ellipse(const SpdMatrix& shape, const Vec& x,
                                                             double r) const {
  require_query(x, r, "ellipse query");
  std::vector<std::size_t> candidates;
  if (!data_) return candidates;
  // Circumscribed ball, then exact filter.
  data_->index.radius_query(x, shape.lambda_max() * r * (1.0 + 1e-12), candidates);
  const Mat inv = shape.inverse();
  std::vector<std::size_t> out;
  out.reserve(candidates.size());
  for (auto i : candidates)
    if ((inv * (data_->points.col(static_cast<Eigen::Index>(i)) - x)).norm() < r) out.push_back(i);
  return out;
}

double DiscreteMeasure::mass_of(const std::vector<std::size_t>& idx) const {
  // Summed in index order so the result does not depend on traversal order.
  std::vector<std::size_t> sorted(idx);
  std::sort(sorted.begin(), sorted.end());
  double m = 0.0;
  for (auto i : sorted) m += data_->weights(static_cast<Eigen::Index>(i));
  return m;
}

double DiscreteMeasure::ball_mass(const Vec& x, double r) const { return mass_of(indices_in_ball(x, r)); }

double DiscreteMeasure::ellipse_mass(const MetricField& field, const Vec& x, double r) const {
  if (field.is_identity()) return ball_mass(x, r);
  return mass_of(indices_in_ellipse(field.eval(x), x, r));
}

std::vector<std::size_t> DiscreteMeasure::support_in(const Vec& x, double r) const {
  auto idx = indices_in_ball(x, r);
  std::vector<std::pair<double, std::size_t>> keyed;
  keyed.reserve(idx.size());
  for (auto i : idx) keyed.emplace_back((data_->points.col(static_cast<Eigen::Index>(i)) - x).norm(), i);
  std::sort(keyed.begin(), keyed.end());
  for (std::size_t k = 0; k < keyed.size(); ++k) idx[k] = keyed[k].second;
  return idx;
}

std::pair<std::size_t, double> DiscreteMeasure::nearest(const Vec& x) const {
  if (empty()) throw DomainError("nearest: empty measure");
  if (x.size() != dim()) throw InputError("nearest: dimension mismatch");
  return data_->index.nearest(x);
}

std::size_t DiscreteMeasure::snap(const Vec& x, double tol) const {
  const auto [idx, dist] = nearest(x);
  if (dist > tol) {
    std::ostringstream msg;
    msg << "point is not on the support (distance " << dist << " > " << tol << ")";
    throw DomainError(msg.str());
  }
  return idx;
}

DiscreteMeasure DiscreteMeasure::pushforward_affine(const Mat& a, const Vec& shift, double mass_scale) const {
  const int d = dim();
  if (a.rows() != d || a.cols() != d || shift.size() != d)
    throw InputError("pushforward_affine: dimension mismatch");
  if (!(mass_scale > 0.0) || !std::isfinite(mass_scale))
    throw InputError("pushforward_affine: mass scale must be positive");
  Eigen::FullPivLU<Mat> lu(a);
  if (!lu.isInvertible()) throw InputError("pushforward_affine: singular map");
  if (a == Mat::Identity(d, d) && shift.isZero(0.0) && mass_scale == 1.0) return *this;
  PointMatrix moved = (a * points()).colwise() + shift;
  return DiscreteMeasure(std::move(moved), weights() * mass_scale);
}

DiscreteMeasure DiscreteMeasure::with_weights(Vec weights) const { return DiscreteMeasure(points(), std::move(weights)); }

DiscreteMeasure DiscreteMeasure::subset(const std::vector<std::size_t>& idx) const {
  PointMatrix pts(dim(), static_cast<Eigen::Index>(idx.size()));
  Vec w(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) {
    pts.col(static_cast<Eigen::Index>(k)) = points().col(static_cast<Eigen::Index>(idx[k]));
    w(static_cast<Eigen::Index>(k)) = weights()(static_cast<Eigen::Index>(idx[k]));
  }
  return DiscreteMeasure(std::move(pts), std::move(w));
}

std::vector<std::size_t> farthest_point_sample(const PointMatrix& points, std::size_t count, std::size_t first,
                                               std::vector<std::size_t>* owner,
                                               std::vector<double>* owner_distance) {
  const auto n = static_cast<std::size_t>(points.cols());
  if (n == 0) return {};
  if (first >= n) throw InputError("farthest_point_sample: start index out of range");
  count = std::min(count, n);
  std::vector<std::size_t> chosen;
  chosen.reserve(count);
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> own(n, 0);
  std::size_t next = first;
  while (chosen.size() < count) {
    const std::size_t slot = chosen.size();
    chosen.push_back(next);
    const auto c = points.col(static_cast<Eigen::Index>(next));
    double best = -1.0;
    std::size_t arg = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = (points.col(static_cast<Eigen::Index>(i)) - c).squaredNorm();
      if (d < dist[i]) {
        dist[i] = d;
        own[i] = slot;
      }
      if (dist[i] > best) {  // first index wins ties
        best = dist[i];
        arg = i;
      }
    }
    next = arg;
  }
  if (owner) *owner = std::move(own);
  if (owner_distance) {
    owner_distance->resize(n);
    for (std::size_t i = 0; i < n; ++i) (*owner_distance)[i] = std::sqrt(dist[i]);
  }
  return chosen;
}

double DiscreteMeasure::diameter_bound() const {
  if (empty()) return 0.0;
  return (points().rowwise().maxCoeff() - points().rowwise().minCoeff()).norm();
}

DiscreteMeasure read_measure_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open measure file " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw InputError("measure file is empty: " + path.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  if (header.size() < 2 || header.back() != "weight")
    throw InputError("measure header must be x0,...,x{d-1},weight");
  const int d = static_cast<int>(header.size()) - 1;
  for (int i = 0; i < d; ++i)
    if (header[static_cast<std::size_t>(i)] != "x" + std::to_string(i))
      throw InputError("measure header must be x0,...,x{d-1},weight");

  std::vector<double> values;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    int col = 0;
    while (std::getline(ss, cell, ',')) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str() || *end != '\0')
        throw InputError("measure row " + std::to_string(rows + 1) + ": bad number '" + cell + "'");
      values.push_back(v);
      ++col;
    }
    if (col != d + 1) throw InputError("measure row " + std::to_string(rows + 1) + ": wrong column count");
    ++rows;
  }
  PointMatrix pts(d, static_cast<Eigen::Index>(rows));
  Vec w(static_cast<Eigen::Index>(rows));
  for (std::size_t r = 0; r < rows; ++r) {
    for (int c = 0; c < d; ++c) pts(c, static_cast<Eigen::Index>(r)) = values[r * (d + 1) + c];
    w(static_cast<Eigen::Index>(r)) = values[r * (d + 1) + d];
  }
  return DiscreteMeasure(std::move(pts), std::move(w));
}

void write_measure_csv(const std::filesystem::path& path, const DiscreteMeasure& mu) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write measure file " + path.string());
  for (int c = 0; c < mu.dim(); ++c) out << 'x' << c << ',';
  out << "weight\n";
  char buf[32];
  for (std::size_t i = 0; i < mu.size(); ++i) {
    for (int c = 0; c < mu.dim(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", mu.points()(c, static_cast<Eigen::Index>(i)));
      out << buf << ',';
    }
    std::snprintf(buf, sizeof buf, "%.17g", mu.weights()(static_cast<Eigen::Index>(i)));
    out << buf << '\n';
  }
}

}  // namespace gmt
