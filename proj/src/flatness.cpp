#include "gmt/flatness.hpp"

#include "gmt/halton.hpp"
#include "gmt/kdtree.hpp"
#include "nelder_mead.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace gmt {

namespace {

Mat orthonormal_columns(const Mat& a) {
  Mat q = a;
  for (Eigen::Index j = 0; j < q.cols(); ++j) {
    for (int pass = 0; pass < 2; ++pass)
      for (Eigen::Index k = 0; k < j; ++k) q.col(j) -= q.col(k).dot(q.col(j)) * q.col(k);
    const double nrm = q.col(j).norm();
    if (!(nrm > 1e-12 * std::max(1.0, a.col(j).norm())))
      throw DegenerateError("plane directions are linearly dependent");
    q.col(j) /= nrm;
  }
  return q;
}

/// d x (d - n) completion of the orthonormal columns of e.
Mat completion(const Mat& e) {
  const Eigen::Index d = e.rows(), n = e.cols();
  const Mat proj = Mat::Identity(d, d) - e * e.transpose();
  Eigen::SelfAdjointEigenSolver<Mat> es(proj);
  // Eigenvalue 1 eigenvectors span the normal space; they are the last d-n.
  return orthonormal_columns(es.eigenvectors().rightCols(d - n));
}

/// Deterministic points of the open unit n-ball, columns.
Mat ball_grid(int n, std::size_t count) {
  Mat g(n, static_cast<Eigen::Index>(count));
  const double total = static_cast<double>(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto c = static_cast<Eigen::Index>(i);
    const double s = (static_cast<double>(i) + 0.5) / total;
    if (n == 1) {
      g(0, c) = 2.0 * s - 1.0;
    } else if (n == 2) {
      const double rho = std::sqrt(s), a = 2.0 * std::numbers::pi * radical_inverse(i, 2);
      g(0, c) = rho * std::cos(a);
      g(1, c) = rho * std::sin(a);
    } else if (n == 3) {
      const double rho = std::cbrt(s), z = 1.0 - 2.0 * radical_inverse(i, 2);
      const double a = 2.0 * std::numbers::pi * radical_inverse(i, 3), ring = std::sqrt(std::max(0.0, 1.0 - z * z));
      g(0, c) = rho * ring * std::cos(a);
      g(1, c) = rho * ring * std::sin(a);
      g(2, c) = rho * z;
    }
  }
  if (n > 3) {
    if (n > 10) throw InputError("plane grids support n <= 10");
    std::size_t found = 0;
    for (std::uint64_t k = 1; found < count; ++k) {
      Vec v(n);
      for (int a = 0; a < n; ++a) v(a) = 2.0 * radical_inverse(k, halton_base(a)) - 1.0;
      if (v.squaredNorm() < 1.0) g.col(static_cast<Eigen::Index>(found++)) = v;
    }
  }
  return g;
}

double grid_fill(int n, std::size_t count) {
  return std::pow(unit_ball_volume(n) / static_cast<double>(count), 1.0 / n);
}

/// Support points of a ball or ellipse around X, expressed as (p - X) / r in a
/// data-adapted orthonormal frame, with a kd-tree for plane-side queries.
struct LocalCloud {
  int d = 0;
  std::unique_ptr<PointMatrix> z;
  Vec w;
  Mat frame;      // columns: frame axes in ambient coordinates
  bool ellipse = false;
  Mat shape_inv;  // region is |shape_inv z| < 1 when ellipse
  std::unique_ptr<KdTree> tree;

  std::size_t size() const { return static_cast<std::size_t>(z->cols()); }
};

Vec canonical_axis(const Vec& v, const PointMatrix& z, const Vec& w) {
  double third = 0.0, scale = 0.0;
  for (Eigen::Index i = 0; i < z.cols(); ++i) {
    const double t = v.dot(z.col(i));
    third += w(i) * t * t * t;
    scale += w(i) * std::abs(t * t * t);
  }
  return (third < -1e-9 * scale) ? Vec(-v) : v;
}

/// pca_frame: principal axes of the second moment about X, descending, signs
/// fixed by the third moment, so the whole computation follows rigid motions.
LocalCloud make_cloud(const DiscreteMeasure& mu, const Vec& x, double r, const MetricField* field, bool pca_frame) {
  LocalCloud c;
  c.d = mu.dim();
  std::vector<std::size_t> idx;
  SpdMatrix shape = SpdMatrix::identity(c.d);
  if (field && !field->is_identity()) {
    shape = field->eval(x);
    idx = mu.indices_in_ellipse(shape, x, r);
    c.ellipse = true;
  } else {
    idx = mu.indices_in_ball(x, r);
  }
  std::sort(idx.begin(), idx.end());
  if (idx.empty()) throw DomainError("flatness: no support points in the ball");
  PointMatrix raw(c.d, static_cast<Eigen::Index>(idx.size()));
  c.w.resize(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) {
    raw.col(static_cast<Eigen::Index>(k)) = (mu.points().col(static_cast<Eigen::Index>(idx[k])) - x) / r;
    c.w(static_cast<Eigen::Index>(k)) = mu.weights()(static_cast<Eigen::Index>(idx[k]));
  }
  c.frame = Mat::Identity(c.d, c.d);
  if (pca_frame) {
    Mat m = Mat::Zero(c.d, c.d);
    for (Eigen::Index i = 0; i < raw.cols(); ++i) m.noalias() += c.w(i) * raw.col(i) * raw.col(i).transpose();
    Eigen::SelfAdjointEigenSolver<Mat> es(m);
    for (int a = 0; a < c.d; ++a) c.frame.col(a) = canonical_axis(es.eigenvectors().col(c.d - 1 - a), raw, c.w);
  }
  c.z = std::make_unique<PointMatrix>(c.frame.transpose() * raw);
  if (c.ellipse) c.shape_inv = c.frame.transpose() * shape.inverse() * c.frame;
  c.tree = std::make_unique<KdTree>(c.z.get());
  return c;
}

/// Plane basis E (d x n) and normal basis (d x (d - n)) in frame coordinates.
struct FramePlane {
  Mat e;
  Mat normal;
};

FramePlane chart_plane(const Vec& a, int d, int n) {
  const Eigen::Map<const Mat> am(a.data(), d - n, n);
  Mat top(d, n), bottom(d, d - n);
  top.topRows(n).setIdentity();
  top.bottomRows(d - n) = am;
  bottom.topRows(n) = -am.transpose();
  bottom.bottomRows(d - n).setIdentity();
  return {orthonormal_columns(top), orthonormal_columns(bottom)};
}

/// Distance from z to P cap {|shape_inv y| < 1}, the plane through 0 with
/// orthonormal basis e. sq is (shape_inv e)^T (shape_inv e).
double dist_to_plane_section(const Vec& z, const FramePlane& p, const Mat& sq) {
  const Vec c0 = p.e.transpose() * z;
  const double perp2 = (p.normal.transpose() * z).squaredNorm();
  if (c0.dot(sq * c0) < 1.0) return std::sqrt(perp2);
  // Closest point of the ellipse section: c(mu) = (I + mu S)^{-1} c0 with
  // c(mu)^T S c(mu) = 1, bisection in mu.
  const Eigen::Index n = c0.size();
  auto at = [&](double mu) -> Vec { return (Mat::Identity(n, n) + mu * sq).ldlt().solve(c0); };
  double lo = 0.0, hi = 1.0;
  while (at(hi).dot(sq * at(hi)) > 1.0 && hi < 1e12) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    const Vec c = at(mid);
    (c.dot(sq * c) > 1.0 ? lo : hi) = mid;
  }
  return std::sqrt(perp2 + (c0 - at(hi)).squaredNorm());
}

double support_side(const LocalCloud& c, const FramePlane& p, const PointMatrix& z) {
  double worst = 0.0;
  if (!c.ellipse) {
    const Mat dist = p.normal.transpose() * z;
    for (Eigen::Index i = 0; i < dist.cols(); ++i) worst = std::max(worst, dist.col(i).norm());
    return worst;
  }
  const Mat se = c.shape_inv * p.e;
  const Mat sq = se.transpose() * se;
  for (Eigen::Index i = 0; i < z.cols(); ++i) worst = std::max(worst, dist_to_plane_section(z.col(i), p, sq));
  return worst;
}

double support_side(const LocalCloud& c, const FramePlane& p) { return support_side(c, p, *c.z); }

/// Every k-th column, at most about `cap` of them.
PointMatrix thinned(const PointMatrix& z, std::size_t cap) {
  const auto m = static_cast<std::size_t>(z.cols());
  if (cap == 0 || m <= cap) return z;
  const std::size_t step = (m + cap - 1) / cap;
  PointMatrix out(z.rows(), static_cast<Eigen::Index>((m + step - 1) / step));
  for (std::size_t i = 0, k = 0; i < m; i += step, ++k) out.col(static_cast<Eigen::Index>(k)) = z.col(static_cast<Eigen::Index>(i));
  return out;
}

/// max(floor, plane side); grid points already within floor of the support
/// are settled by the first point found.
double plane_side(const LocalCloud& c, const FramePlane& p, const Mat& grid, double floor = 0.0) {
  Mat coords = grid;
  if (c.ellipse) {
    // c^T S c < 1 with S = L L^T  <=>  c = L^{-T} u, |u| < 1.
    const Mat se = c.shape_inv * p.e;
    const Eigen::LLT<Mat> llt(se.transpose() * se);
    coords = llt.matrixU().solve(grid);
  }
  const Mat q = p.e * coords;
  double worst = floor;
  Vec v(c.d);
  for (Eigen::Index i = 0; i < q.cols(); ++i) {
    v = q.col(i);
    worst = std::max(worst, c.tree->nearest_distance_above(v, worst));
  }
  return worst;
}

std::uint64_t mix(std::uint64_t seed, std::uint64_t k) {
  std::mt19937_64 g(seed ^ (0x9e3779b97f4a7c15ULL * (k + 1)));
  return g();
}

double unit_uniform(std::mt19937_64& g) { return static_cast<double>(g() >> 11) * 0x1.0p-53; }

struct SearchOutcome {
  double value;
  FramePlane plane;
};

/// Minimizes `objective(plane)` over the chart around the frame's leading n
/// axes, from the seed plane and `restarts` deterministic random starts;
/// `final_value` re-scores each run's best plane.
template <class Obj, class Final>
SearchOutcome search_planes(int d, int n, const PlaneSearchOptions& opts, Obj&& objective, Final&& final_value) {
  const int m = n * (d - n);
  SearchOutcome best{std::numeric_limits<double>::infinity(), {}};
  for (int run = 0; run <= std::max(0, opts.restarts); ++run) {
    Vec start = Vec::Zero(m);
    if (run > 0) {
      std::mt19937_64 g(mix(opts.seed, static_cast<std::uint64_t>(run)));
      for (int k = 0; k < m; ++k) start(k) = 2.0 * unit_uniform(g) - 1.0;
    }
    auto f = [&](const Vec& a) { return objective(chart_plane(a, d, n)); };
    const auto res = detail::nelder_mead(f, start, 0.25, opts.max_iterations);
    FramePlane plane = chart_plane(res.x, d, n);
    const double v = final_value(plane);
    if (v < best.value) best = {v, std::move(plane)};
  }
  return best;
}

Plane to_global(const Vec& x, const LocalCloud& c, const FramePlane& p) {
  return Plane::through(x, c.frame * p.e);
}

void require_n(int n, int d, const char* what) {
  if (n < 1 || n >= d) throw InputError(std::string(what) + ": need 1 <= n < ambient dimension");
}

}  // namespace

Plane Plane::through(const Vec& base, const Mat& directions) {
  if (directions.rows() != base.size() || directions.cols() < 1 || directions.cols() > base.size())
    throw InputError("Plane: direction matrix has the wrong shape");
  Plane p;
  p.base = base;
  const Mat e = orthonormal_columns(directions);
  p.basis = e.transpose();
  if (e.cols() + 1 == e.rows()) p.normal = completion(e).col(0);
  return p;
}

Plane Plane::with_normal(const Vec& base, const Vec& normal) {
  if (normal.size() != base.size() || !(normal.norm() > 0.0)) throw InputError("Plane: bad normal");
  Mat nn = normal.normalized();
  Plane p = through(base, completion(nn));
  p.normal = normal.normalized();
  return p;
}

Vec Plane::project(const Vec& p) const { return base + basis.transpose() * (basis * (p - base)); }

double Plane::distance(const Vec& p) const { return (p - project(p)).norm(); }

Mat Plane::complement() const { return completion(basis.transpose()); }

double KernelSpec::transition(double u) {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  const double a = std::exp(-1.0 / u), b = std::exp(-1.0 / (1.0 - u));
  return a / (a + b);
}

double KernelSpec::operator()(double t) const {
  if (t <= inner) return 1.0;
  if (t >= outer) return 0.0;
  return transition((outer - t) / (outer - inner));
}

void KernelSpec::validate() const {
  if (!(inner >= 0.0) || !(outer > inner)) throw InputError("kernel needs 0 <= inner < outer");
}

double hausdorff_distance(const PointMatrix& a, const PointMatrix& b) {
  if (a.cols() == 0 || b.cols() == 0) throw DomainError("hausdorff distance of an empty set");
  if (a.rows() != b.rows()) throw InputError("hausdorff distance: dimension mismatch");
  auto directed = [](const PointMatrix& from, const PointMatrix& to) {
    const KdTree tree(&to);
    double worst = 0.0;
    Vec v(from.rows());
    for (Eigen::Index i = 0; i < from.cols(); ++i) {
      v = from.col(i);
      worst = std::max(worst, tree.nearest(v).second);
    }
    return worst;
  };
  return std::max(directed(a, b), directed(b, a));
}

Plane fit_plane_weighted(const DiscreteMeasure& mu, const Vec& x, double r, const KernelSpec& kernel,
                         bool through_center, int n) {
  require_positive_radius(r, "plane fit");
  kernel.validate();
  const int d = mu.dim();
  require_n(n, d, "plane fit");
  auto idx = mu.indices_in_ball(x, kernel.outer * r);
  std::sort(idx.begin(), idx.end());
  std::vector<double> wk;
  std::vector<std::size_t> used;
  for (auto i : idx) {
    const double phi = kernel((mu.point(i) - x).norm() / r);
    if (phi > 0.0) {
      used.push_back(i);
      wk.push_back(phi * mu.weights()(static_cast<Eigen::Index>(i)));
    }
  }
  if (used.size() < static_cast<std::size_t>(n + 1))
    throw DegenerateError("plane fit: fewer than n+1 points carry kernel weight");
  Vec center = x;
  if (!through_center) {
    center = Vec::Zero(d);
    double total = 0.0;
    for (std::size_t k = 0; k < used.size(); ++k) {
      center += wk[k] * mu.point(used[k]);
      total += wk[k];
    }
    center /= total;
  }
  Mat m = Mat::Zero(d, d);
  for (std::size_t k = 0; k < used.size(); ++k) {
    const Vec v = mu.point(used[k]) - center;
    m.noalias() += wk[k] * v * v.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(m);
  const double trace = es.eigenvalues().sum();
  if (!(es.eigenvalues()(d - n) > 1e-12 * trace)) throw DegenerateError("plane fit: rank-deficient moment matrix");
  return Plane::through(center, es.eigenvectors().rightCols(n).rowwise().reverse());
}

BetaResult beta_centered(const DiscreteMeasure& mu, const Vec& x, double r, int n, const PlaneSearchOptions& opts) {
  require_positive_radius(r, "beta");
  require_n(n, mu.dim(), "beta");
  const Vec c = mu.point(mu.snap(x));
  const LocalCloud cloud = make_cloud(mu, c, r, nullptr, true);
  const PointMatrix few = thinned(*cloud.z, opts.search_points);
  auto obj = [&](const FramePlane& p) { return support_side(cloud, p, few); };
  auto fin = [&](const FramePlane& p) { return support_side(cloud, p); };
  const auto best = search_planes(cloud.d, n, opts, obj, fin);
  return {best.value, to_global(c, cloud, best.plane), 0.0, cloud.size()};
}

BetaResult bbeta(const DiscreteMeasure& mu, const Vec& x, double r, int n, const MetricField* field,
                 const PlaneSearchOptions& opts) {
  require_positive_radius(r, "bbeta");
  require_n(n, mu.dim(), "bbeta");
  const Vec c = mu.point(mu.snap(x));
  const LocalCloud cloud = make_cloud(mu, c, r, field, true);
  const Mat coarse = ball_grid(n, opts.search_grid), fine = ball_grid(n, opts.final_grid);
  const PointMatrix few = thinned(*cloud.z, opts.search_points);
  auto obj = [&](const FramePlane& p) { return plane_side(cloud, p, coarse, support_side(cloud, p, few)); };
  auto fin = [&](const FramePlane& p) { return plane_side(cloud, p, fine, support_side(cloud, p)); };
  const auto best = search_planes(cloud.d, n, opts, obj, fin);
  return {best.value, to_global(c, cloud, best.plane), grid_fill(n, opts.final_grid), cloud.size()};
}

double bilateral_distance(const DiscreteMeasure& mu, const Vec& x, double r, const Plane& plane,
                          const MetricField* field, std::size_t grid) {
  require_positive_radius(r, "bilateral distance");
  if (plane.ambient_dim() != mu.dim()) throw InputError("bilateral distance: plane dimension mismatch");
  const Vec c = mu.point(mu.snap(x));
  if (plane.distance(c) > 1e-9 * std::max(1.0, r)) throw InputError("bilateral distance: plane must contain X");
  const LocalCloud cloud = make_cloud(mu, c, r, field, false);
  const FramePlane p{plane.basis.transpose(), plane.complement()};
  return r * plane_side(cloud, p, ball_grid(plane.dim(), grid), support_side(cloud, p));
}

double beta2_smooth(const DiscreteMeasure& mu, const Vec& x, double r, int n, const KernelSpec& kernel) {
  require_positive_radius(r, "beta2");
  kernel.validate();
  const int d = mu.dim();
  require_n(n, d, "beta2");
  auto idx = mu.indices_in_ball(x, kernel.outer * r);
  std::sort(idx.begin(), idx.end());
  double total = 0.0;
  Vec centroid = Vec::Zero(d);
  std::vector<double> wk(idx.size());
  std::size_t positive = 0;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const Vec p = mu.point(idx[k]);
    wk[k] = mu.weights()(static_cast<Eigen::Index>(idx[k])) * kernel((p - x).norm() / r);
    if (wk[k] > 0.0) ++positive;
    total += wk[k];
    centroid += wk[k] * p;
  }
  if (positive < static_cast<std::size_t>(n + 1)) throw DegenerateError("beta2: fewer than n+1 points carry kernel weight");
  centroid /= total;
  Mat m = Mat::Zero(d, d);
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const Vec v = mu.point(idx[k]) - centroid;
    m.noalias() += wk[k] * v * v.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(m, Eigen::EigenvaluesOnly);
  double residual = 0.0;
  for (int a = 0; a < d - n; ++a) residual += std::max(0.0, es.eigenvalues()(a));
  return std::sqrt(residual / std::pow(r, n + 2));
}

ComparisonRecord flatness_comparison_check(const MetricField& field, const DiscreteMeasure& mu, const Vec& x,
                                           double r, const Plane& plane, double delta,
                                           const CompactBounds& bounds) {
  require_positive_radius(r, "comparison");
  if (!(delta > 0.0) || !(delta < bounds.delta_K)) {
    std::ostringstream msg;
    msg << "comparison: delta " << delta << " must lie in (0, delta_K = " << bounds.delta_K << ")";
    throw HypothesisError(msg.str());
  }
  ComparisonRecord rec;
  rec.r_euclidean_outer = bounds.lambda_max_K * r;
  rec.r_euclidean_inner = bounds.lambda_min_K * r;
  const double aniso = bilateral_distance(mu, x, r, plane, &field);

  auto& one = rec.euclidean_to_anisotropic;
  one.hypothesis_lhs = bilateral_distance(mu, x, rec.r_euclidean_outer, plane);
  one.hypothesis_rhs = delta * rec.r_euclidean_outer;
  one.hypothesis_met = one.hypothesis_lhs <= one.hypothesis_rhs;
  one.conclusion_lhs = aniso;
  one.conclusion_rhs = (2.0 + bounds.eccentricity) * delta * rec.r_euclidean_outer;
  one.pass = !one.hypothesis_met || one.conclusion_lhs <= one.conclusion_rhs;

  auto& two = rec.anisotropic_to_euclidean;
  two.hypothesis_lhs = aniso;
  two.hypothesis_rhs = delta * r;
  two.hypothesis_met = two.hypothesis_lhs <= two.hypothesis_rhs;
  two.conclusion_lhs = bilateral_distance(mu, x, rec.r_euclidean_inner, plane);
  two.conclusion_rhs = 2.0 * delta * r;
  two.pass = !two.hypothesis_met || two.conclusion_lhs <= two.conclusion_rhs;
  return rec;
}

nlohmann::json FlatnessProfile::to_json() const {
  nlohmann::json j{{"center", std::vector<double>(center.data(), center.data() + center.size())},
                   {"scales", scales},
                   {"beta", beta},
                   {"bbeta", bbeta},
                   {"beta2", beta2}};
  j["bbeta_aniso"] = bbeta_aniso.empty() ? nlohmann::json(nullptr) : nlohmann::json(bbeta_aniso);
  j["gamma_fit"] = std::isfinite(gamma_fit) ? nlohmann::json(gamma_fit) : nlohmann::json(nullptr);
  return j;
}

std::string FlatnessProfile::to_csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "scale,beta,bbeta,bbeta_aniso,beta2\n";
  for (std::size_t i = 0; i < scales.size(); ++i) {
    out << scales[i] << ',' << beta[i] << ',' << bbeta[i] << ',';
    if (!bbeta_aniso.empty()) out << bbeta_aniso[i];
    out << ',' << beta2[i] << '\n';
  }
  return out.str();
}

FlatnessProfile flatness_profile(const DiscreteMeasure& mu, const Vec& x, const std::vector<double>& scales, int n,
                                 const MetricField* field, const PlaneSearchOptions& opts) {
  if (scales.empty()) throw InputError("flatness profile: no scales");
  FlatnessProfile prof;
  prof.center = mu.point(mu.snap(x));
  prof.scales = scales;
  const std::size_t k = scales.size();
  prof.beta.resize(k);
  prof.bbeta.resize(k);
  prof.beta2.resize(k);
  const bool aniso = field && !field->is_identity();
  if (aniso) prof.bbeta_aniso.resize(k);
  parallel_for(k, [&](std::size_t i) {
    const double r = scales[i];
    prof.beta[i] = beta_centered(mu, prof.center, r, n, opts).value;
    prof.bbeta[i] = bbeta(mu, prof.center, r, n, nullptr, opts).value;
    if (aniso) prof.bbeta_aniso[i] = bbeta(mu, prof.center, r, n, field, opts).value;
    prof.beta2[i] = beta2_smooth(mu, prof.center, r, n);
  });
  try {
    prof.gamma_fit = decay_fit(prof).gamma;
  } catch (const DegenerateError&) {
  }
  return prof;
}

DecayFit decay_fit(const std::vector<double>& scales, const std::vector<double>& beta) {
  const auto fit = fit_power_law(scales, beta, 1e-12, 3);
  return {fit.exponent, fit.coefficient};
}

DecayFit decay_fit(const FlatnessProfile& profile) { return decay_fit(profile.scales, profile.beta); }

}  // namespace gmt
