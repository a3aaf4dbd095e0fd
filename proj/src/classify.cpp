#include "gmt/classify.hpp"

#include "gmt/blowup.hpp"
#include "gmt/halton.hpp"
#include "nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace gmt {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;

nlohmann::json vec_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

nlohmann::json mat_json(const Mat& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vec_json(m.row(i).transpose()));
  return rows;
}

nlohmann::json finite_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

// Golden-spiral directions on S^2.
std::vector<Eigen::Vector3d> sphere_directions(std::size_t count) {
  std::vector<Eigen::Vector3d> out;
  out.reserve(count);
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (std::size_t i = 0; i < count; ++i) {
    const double z = 1.0 - (2.0 * static_cast<double>(i) + 1.0) / static_cast<double>(count);
    const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden * static_cast<double>(i);
    out.emplace_back(rho * std::cos(phi), rho * std::sin(phi), z);
  }
  return out;
}

// Points of the light cone inside B(0,1), spread evenly in 3-volume over both nappes.
PointMatrix cone_model_points(std::size_t count) {
  PointMatrix out(4, static_cast<Eigen::Index>(count));
  const auto dirs = sphere_directions(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double s = kInvSqrt2 * std::cbrt(radical_inverse(i + 1, 3));
    const double sign = (i % 2 == 0) ? 1.0 : -1.0;
    const auto col = static_cast<Eigen::Index>(i);
    out.block<3, 1>(0, col) = s * dirs[i];
    out(3, col) = sign * s;
  }
  return out;
}

// Cayley map of a skew matrix built from the upper triangle entries.
Mat cayley(const Vec& params, int d) {
  Mat s = Mat::Zero(d, d);
  int k = 0;
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      s(i, j) = params(k);
      s(j, i) = -params(k);
      ++k;
    }
  const Mat id = Mat::Identity(d, d);
  return (id - s).partialPivLu().solve(id + s);
}

std::vector<std::size_t> strided(std::vector<std::size_t> idx, std::size_t cap) {
  std::sort(idx.begin(), idx.end());
  if (idx.size() <= cap) return idx;
  std::vector<std::size_t> out;
  const double step = static_cast<double>(idx.size()) / static_cast<double>(cap);
  for (std::size_t k = 0; k < cap; ++k) out.push_back(idx[static_cast<std::size_t>(static_cast<double>(k) * step)]);
  return out;
}

struct ConeFit {
  double residual = std::numeric_limits<double>::infinity();
  Mat rotation;
  Vec apex;
};

// Hausdorff distance between data in B(apex, 1) and the model cone in B(0,1)
// for the registration u = R (p - apex).
double cone_residual(const DiscreteMeasure& nu, const std::vector<std::size_t>& near, const PointMatrix& model,
                     const Mat& rot, const Vec& apex) {
  double worst = 0.0;
  for (std::size_t i : near) {
    const Vec u = rot * (nu.point(i) - apex);
    if (!(u.norm() < 1.0)) continue;
    worst = std::max(worst, std::abs(u.head(3).norm() - std::abs(u(3))) * kInvSqrt2);
  }
  const Mat back = rot.transpose();
  for (Eigen::Index j = 0; j < model.cols(); ++j) worst = std::max(worst, nu.nearest(apex + back * model.col(j)).second);
  return worst;
}

ConeFit register_cone(const DiscreteMeasure& nu, const Vec& c) {
  // Apex: the candidate near c that looks most conical about itself. A
  // measure conical about X has no centroid shift in B(X, r) and a second
  // moment that scales exactly like r^2.
  auto moment = [&](const Vec& x, double r, Vec& shift) {
    Mat m = Mat::Zero(4, 4);
    shift = Vec::Zero(4);
    double mass = 0.0;
    for (std::size_t i : nu.indices_in_ball(x, r)) {
      const double w = nu.weights()(static_cast<Eigen::Index>(i));
      const Vec z = nu.point(i) - x;
      m.noalias() += w * z * z.transpose();
      shift += w * z;
      mass += w;
    }
    shift /= mass * r;
    return Mat(m / (mass * r * r));
  };
  std::vector<Vec> candidates{c};
  {
    const auto idx = strided(nu.indices_in_ball(c, 0.25), 20000);
    PointMatrix pts(4, static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) pts.col(static_cast<Eigen::Index>(k)) = nu.point(idx[k]);
    if (pts.cols() > 1)
      for (std::size_t k : farthest_point_sample(pts, std::min<std::size_t>(17, idx.size())))
        candidates.push_back(pts.col(static_cast<Eigen::Index>(k)));
  }
  Vec apex = c;
  double best = std::numeric_limits<double>::infinity();
  for (const Vec& cand : candidates) {
    Vec b1, b2;
    const Mat m1 = moment(cand, 0.25, b1), m2 = moment(cand, 0.5, b2);
    const double defect = b1.norm() + b2.norm() + (m1 - m2).norm();
    if (defect < best) {
      best = defect;
      apex = cand;
    }
  }

  // Frame: the cone axis carries three times the second moment of each
  // cross-section direction, so it is the top eigenvector.
  const auto idx = nu.indices_in_ball(apex, 1.0);
  Mat m = Mat::Zero(4, 4);
  for (std::size_t i : idx) {
    const Vec z = nu.point(i) - apex;
    m.noalias() += nu.weights()(static_cast<Eigen::Index>(i)) * z * z.transpose();
  }
  const Eigen::SelfAdjointEigenSolver<Mat> eig(m);
  const Mat r0 = eig.eigenvectors().transpose();  // last row = axis

  const auto search = strided(nu.indices_in_ball(apex, 1.05), 3000);
  const PointMatrix coarse_model = cone_model_points(3000);
  auto objective = [&](const Vec& p) {
    return cone_residual(nu, search, coarse_model, cayley(p.head(6), 4) * r0, apex + p.tail(4));
  };
  const auto refined = detail::nelder_mead(objective, Vec::Zero(10), 0.02, 300, 1e-6);

  ConeFit out;
  const auto all = nu.indices_in_ball(apex, 1.05);
  const PointMatrix fine_model = cone_model_points(20000);
  for (const Vec& p : {Vec(Vec::Zero(10)), refined.x}) {
    const Mat rot = cayley(p.head(6), 4) * r0;
    const Vec a = apex + p.tail(4);
    const double res = cone_residual(nu, all, fine_model, rot, a);
    if (res < out.residual) {
      out.residual = res;
      out.rotation = rot;
      out.apex = a;
    }
  }
  return out;
}

}  // namespace

const char* to_string(KpLabel label) {
  switch (label) {
    case KpLabel::Plane: return "Plane";
    case KpLabel::LightCone: return "LightCone";
    default: return "Unknown";
  }
}

nlohmann::json KpVerdict::to_json() const {
  return {{"label", to_string(label)},
          {"rotation", mat_json(rotation)},
          {"translation", vec_json(translation)},
          {"residual", finite_or_null(residual)},
          {"flatness", flatness}};
}

KpVerdict kp_classify(const DiscreteMeasure& nu, int n) {
  if (nu.empty()) throw InputError("kp classify: empty measure");
  const int d = nu.dim();
  if (n < 1 || n >= d) throw InputError("kp classify: need 1 <= n < d");
  const Vec origin = Vec::Zero(d);
  Vec c = origin;
  if (nu.nearest(origin).second > 1e-6) {
    const Vec centroid = nu.points() * nu.weights() / nu.total_mass();
    c = nu.point(nu.nearest(centroid).first);
  } else {
    c = nu.point(nu.nearest(origin).first);
  }
  const auto centered = nu.pushforward_affine(Mat::Identity(d, d), -c, 1.0);

  KpVerdict out;
  out.translation = c;
  out.rotation = Mat::Identity(d, d);
  out.residual = std::numeric_limits<double>::infinity();
  const auto flat = flatness_functional(centered, n);
  out.flatness = flat.value;
  if (flat.value <= kKpPlaneLevel) {
    out.residual = bilateral_distance(centered, origin, 1.0, flat.plane);
    Mat rot(d, d);
    rot.topRows(n) = flat.plane.basis;
    rot.bottomRows(d - n) = flat.plane.complement().transpose();
    out.rotation = rot;
    out.label = out.residual <= kKpAcceptance ? KpLabel::Plane : KpLabel::Unknown;
    return out;
  }
  if (n == 3 && d == 4) {
    const auto fit = register_cone(nu, c);
    out.residual = fit.residual;
    out.rotation = fit.rotation;
    out.translation = fit.apex;
    if (fit.residual <= kKpAcceptance) out.label = KpLabel::LightCone;
  }
  return out;
}

double cone_plane_distance(const Vec& normal, std::size_t directions) {
  if (normal.size() != 4 || !(normal.norm() > 0.0)) throw InputError("cone-plane distance: need a normal in R^4");
  const Vec nu = normal.normalized();
  // Cone side: |<y, nu>| over cone points (x, +-|x|) with |x| = 1/sqrt2.
  const double cone_side = (nu.head(3).norm() + std::abs(nu(3))) * kInvSqrt2;
  // Plane side: distance from unit y in the plane to the cone is ||y'| - |y4|| / sqrt2.
  const Mat basis = Plane::with_normal(Vec::Zero(4), nu).basis;  // 3 x 4
  double plane_side = 0.0;
  for (const auto& w : sphere_directions(directions)) {
    const Vec y = basis.transpose() * Vec(w);
    plane_side = std::max(plane_side, std::abs(y.head(3).norm() - std::abs(y(3))) * kInvSqrt2);
  }
  return std::max(cone_side, plane_side);
}

nlohmann::json ConeGap::to_json() const {
  return {{"minimum", minimum},
          {"argmin_normal", vec_json(argmin_normal)},
          {"witness", witness},
          {"axis_planes", axis_planes},
          {"planes", planes}};
}

ConeGap cone_plane_gap(int resolution) {
  if (resolution < 32) throw InputError("cone-plane gap: resolution must be at least 32");
  ConeGap out;
  out.minimum = std::numeric_limits<double>::infinity();
  const auto count = static_cast<std::size_t>(resolution) * static_cast<std::size_t>(resolution);
  for (std::size_t i = 0; i < count; ++i) {
    // Uniform points on S^3 from a Halton triple.
    const double u1 = radical_inverse(i + 1, 2), u2 = radical_inverse(i + 1, 3), u3 = radical_inverse(i + 1, 5);
    const double a = std::sqrt(1.0 - u1), b = std::sqrt(u1);
    Vec nu(4);
    nu << a * std::sin(2 * std::numbers::pi * u2), a * std::cos(2 * std::numbers::pi * u2),
        b * std::sin(2 * std::numbers::pi * u3), b * std::cos(2 * std::numbers::pi * u3);
    const double v = cone_plane_distance(nu, 500);
    if (v < out.minimum) {
      out.minimum = v;
      out.argmin_normal = nu;
    }
  }
  out.planes = count;
  const auto refined = detail::nelder_mead([](const Vec& p) { return cone_plane_distance(p, 500); },
                                           out.argmin_normal, 0.05, 200, 1e-9);
  Vec best = refined.x.normalized();
  const double fine = cone_plane_distance(best);
  if (fine < out.minimum) {
    out.minimum = fine;
    out.argmin_normal = best;
  }
  out.witness = cone_plane_distance(Vec::Unit(4, 3));
  out.axis_planes = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 64; ++k) {
    const double t = std::numbers::pi * k / 64.0;
    Vec nu(4);
    nu << std::cos(t), std::sin(t) * 0.6, std::sin(t) * 0.8, 0.0;
    out.axis_planes = std::min(out.axis_planes, cone_plane_distance(nu));
  }
  out.minimum = std::min({out.minimum, out.witness, out.axis_planes});
  return out;
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::regular: return "regular";
    case Verdict::singular: return "singular";
    default: return "inconclusive";
  }
}

nlohmann::json PointClassification::to_json() const {
  return {{"point", vec_json(point)},
          {"scales", scales},
          {"bbeta", bbeta_values},
          {"verdict", to_string(verdict)},
          {"threshold", threshold}};
}

PointMatrix interior_centers(const DiscreteMeasure& mu, std::size_t count, double radius) {
  require_positive_radius(radius, "interior centers");
  if (mu.empty() || count == 0) return PointMatrix(mu.dim(), 0);
  const auto order = farthest_point_sample(mu.points(), std::min(mu.size(), 8 * count));
  std::vector<std::size_t> keep;
  for (std::size_t i : order) {
    if (keep.size() == count) break;
    const Vec x = mu.point(i);
    const auto idx = mu.indices_in_ball(x, radius);
    Vec centroid = Vec::Zero(mu.dim());
    double mass = 0.0;
    for (std::size_t j : idx) {
      const double w = mu.weights()(static_cast<Eigen::Index>(j));
      centroid += w * mu.point(j);
      mass += w;
    }
    if ((centroid / mass - x).norm() <= 0.1 * radius) keep.push_back(i);
  }
  PointMatrix out(mu.dim(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = mu.point(keep[k]);
  return out;
}

std::vector<PointClassification> regular_singular_partition(const DiscreteMeasure& mu, const MetricField* field,
                                                            const PointMatrix& centers,
                                                            const std::vector<double>& scales, int n,
                                                            double threshold) {
  if (!(threshold > 0.0 && threshold < kInvSqrt2)) throw InputError("partition: threshold must lie in (0, 1/sqrt2)");
  std::vector<double> sorted = scales;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  if (sorted.size() < 3 || !(sorted.back() >= 4.0 * sorted.front() * (1.0 - 1e-12)))
    throw InputError("partition: scales must span at least three dyadic levels");
  for (double r : sorted) require_positive_radius(r, "partition");
  if (centers.rows() != mu.dim()) throw InputError("partition: center dimension");
  const MetricField* aniso = (field != nullptr && !field->is_identity()) ? field : nullptr;
  const std::size_t low = (sorted.size() + 2) / 3;

  std::vector<PointClassification> out(static_cast<std::size_t>(centers.cols()));
  parallel_for(out.size(), [&](std::size_t k) {
    auto& row = out[k];
    row.point = mu.point(mu.snap(centers.col(static_cast<Eigen::Index>(k))));
    row.scales = sorted;
    row.threshold = threshold;
    for (double r : sorted) row.bbeta_values.push_back(bbeta(mu, row.point, r, n, aniso).value);
    const auto head = row.bbeta_values.begin();
    const double hi = *std::max_element(head, head + static_cast<std::ptrdiff_t>(low));
    const double lo = *std::min_element(head, head + static_cast<std::ptrdiff_t>(low));
    row.verdict = hi < threshold ? Verdict::regular : (lo >= threshold ? Verdict::singular : Verdict::inconclusive);
  });
  return out;
}

std::string partition_summary_csv(const std::vector<PointClassification>& rows) {
  std::size_t counts[3] = {0, 0, 0};
  for (const auto& r : rows) ++counts[static_cast<int>(r.verdict)];
  std::ostringstream s;
  s << "verdict,count\n";
  for (Verdict v : {Verdict::regular, Verdict::singular, Verdict::inconclusive})
    s << to_string(v) << ',' << counts[static_cast<int>(v)] << '\n';
  return s.str();
}

nlohmann::json PropagationRecord::to_json() const {
  return {{"center", vec_json(center)},       {"r", r},
          {"N", N},                           {"eps1", eps1},
          {"delta0", delta0},                 {"dilates", dilates},
          {"hypothesis_met", hypothesis_met}, {"beta2_ball", beta2_ball},
          {"pass", pass},                     {"worst_subball_ratio", worst_subball_ratio},
          {"subballs", subballs}};
}

PropagationRecord beta2_propagation_check(const DiscreteMeasure& mu, const Vec& x, double r, int N, double eps1,
                                          double delta0, int n) {
  require_positive_radius(r, "propagation");
  if (N < 1) throw InputError("propagation: N must be >= 1");
  if (!(eps1 > 0.0) || !(delta0 > 0.0)) throw InputError("propagation: eps1 and delta0 must be positive");
  if (mu.empty()) throw InputError("propagation: empty measure");
  const Vec c = mu.point(mu.snap(x));
  // Extent: the dilated ball must stay inside the support's bounding box
  // along every coordinate the support actually spans.
  const double big = std::ldexp(r, N);
  const Vec lo = mu.points().rowwise().minCoeff(), hi = mu.points().rowwise().maxCoeff();
  const double span = (hi - lo).maxCoeff();
  for (int a = 0; a < mu.dim(); ++a) {
    if (hi(a) - lo(a) <= 1e-9 * span) continue;
    if (c(a) - big < lo(a) - 1e-12 || c(a) + big > hi(a) + 1e-12) {
      std::ostringstream msg;
      msg << "propagation: 2^N B leaves the data extent along axis " << a;
      throw DomainError(msg.str());
    }
  }
  PropagationRecord out;
  out.center = c;
  out.r = r;
  out.N = N;
  out.eps1 = eps1;
  out.delta0 = delta0;
  out.hypothesis_met = true;
  for (int k = 1; k <= N; ++k) {
    out.dilates.push_back(beta2_smooth(mu, c, std::ldexp(r, k), n));
    out.hypothesis_met = out.hypothesis_met && out.dilates.back() <= eps1;
  }
  out.beta2_ball = beta2_smooth(mu, c, r, n);
  out.pass = !out.hypothesis_met || out.beta2_ball <= delta0;

  const auto half = mu.indices_in_ball(c, 0.5 * r);
  PointMatrix pts(mu.dim(), static_cast<Eigen::Index>(half.size()));
  for (std::size_t k = 0; k < half.size(); ++k) pts.col(static_cast<Eigen::Index>(k)) = mu.point(half[k]);
  const auto picks = farthest_point_sample(pts, std::min<std::size_t>(8, half.size()));
  for (int j = 1; j <= 3; ++j)
    for (std::size_t p : picks) {
      try {
        const double b = beta2_smooth(mu, pts.col(static_cast<Eigen::Index>(p)), std::ldexp(r, -j), n);
        out.worst_subball_ratio = std::max(out.worst_subball_ratio, b / delta0);
        ++out.subballs;
      } catch (const DegenerateError&) {
        // too few points at this radius
      }
    }
  return out;
}

nlohmann::json PersistenceRecord::to_json() const {
  nlohmann::json ys = nlohmann::json::array();
  for (const auto& v : y) ys.push_back(vec_json(v));
  return {{"y", ys}, {"bbeta", bbeta_values}, {"minimum", minimum}, {"persistent", persistent}, {"threshold", threshold}};
}

PersistenceRecord singularity_persistence(const DiscreteMeasure& mu, const MetricField* field, const Vec& x_limit,
                                          const PointMatrix& singular_points, const std::vector<double>& radii,
                                          int n, double threshold) {
  const auto count = static_cast<std::size_t>(singular_points.cols());
  if (count == 0 || radii.size() != count) throw InputError("persistence: need one radius per point");
  if (singular_points.rows() != mu.dim() || x_limit.size() != mu.dim()) throw InputError("persistence: dimension");
  const Mat inv = (field != nullptr && !field->is_identity()) ? field->eval(x_limit).inverse()
                                                              : Mat::Identity(mu.dim(), mu.dim());
  PersistenceRecord out;
  out.threshold = threshold;
  for (std::size_t k = 0; k < count; ++k) {
    require_positive_radius(radii[k], "persistence");
    out.y.push_back(inv * (singular_points.col(static_cast<Eigen::Index>(k)) - x_limit) / radii[k]);
  }
  const std::size_t tail = std::max<std::size_t>(count / 2, std::min<std::size_t>(2, count));
  for (std::size_t a = count - tail; a < count; ++a)
    for (std::size_t b = a + 1; b < count; ++b)
      if ((out.y[a] - out.y[b]).norm() > 0.05) throw PreconditionError("persistence: Y_k is not Cauchy over the tail");

  out.minimum = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < count; ++k) {
    const auto scaled = rescale(mu, field, x_limit, radii[k]);
    const auto& nu = scaled.measure;
    const Vec y = nu.point(nu.snap(out.y[k], 1e-9 * std::max(1.0, out.y[k].norm())));
    out.bbeta_values.push_back(bbeta(nu, y, 1.0, n).value);
    out.minimum = std::min(out.minimum, out.bbeta_values.back());
  }
  out.persistent = out.minimum >= threshold;
  return out;
}

}  // namespace gmt
