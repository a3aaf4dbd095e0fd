#include "gmt/blowup.hpp"

#include "network_simplex.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gmt {

namespace {

nlohmann::json finite_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

// Signed point masses c = nu1 - nu2 inside the open ball B(0, r), with
// coincident points merged.
struct SignedCloud {
  PointMatrix points;
  std::vector<double> mass;
};

SignedCloud merge_coincident(const PointMatrix& pts, const std::vector<double>& c) {
  const Eigen::Index d = pts.rows();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(pts.cols()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  auto less = [&](Eigen::Index a, Eigen::Index b) {
    for (Eigen::Index k = 0; k < d; ++k) {
      if (pts(k, a) < pts(k, b)) return true;
      if (pts(k, a) > pts(k, b)) return false;
    }
    return false;
  };
  std::stable_sort(order.begin(), order.end(), less);
  std::vector<Eigen::Index> keep;
  std::vector<double> mass;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (!keep.empty() && !less(keep.back(), order[k]) && !less(order[k], keep.back())) {
      mass.back() += c[static_cast<std::size_t>(order[k])];
    } else {
      keep.push_back(order[k]);
      mass.push_back(c[static_cast<std::size_t>(order[k])]);
    }
  }
  SignedCloud out;
  std::vector<Eigen::Index> nonzero;
  for (std::size_t k = 0; k < keep.size(); ++k)
    if (mass[k] != 0.0) nonzero.push_back(static_cast<Eigen::Index>(k));
  out.points.resize(d, static_cast<Eigen::Index>(nonzero.size()));
  for (std::size_t k = 0; k < nonzero.size(); ++k) {
    out.points.col(static_cast<Eigen::Index>(k)) = pts.col(keep[static_cast<std::size_t>(nonzero[k])]);
    out.mass.push_back(mass[static_cast<std::size_t>(nonzero[k])]);
  }
  return out;
}

struct LpOutcome {
  double value = 0.0;
  double witness = 0.0;
  long pivots = 0;
};

// max sum_i c_i f_i over 0 <= f_i <= max(0, r - |x_i|), |f_i - f_j| <= |x_i - x_j|.
LpOutcome solve_signed(const SignedCloud& cloud, double r, double sign) {
  std::vector<Eigen::Index> src, snk;
  for (std::size_t k = 0; k < cloud.mass.size(); ++k) (sign * cloud.mass[k] > 0.0 ? src : snk).push_back(static_cast<Eigen::Index>(k));
  if (src.empty()) return {};
  const Eigen::Index d = cloud.points.rows();
  std::vector<double> supply, demand, cap_src, cap_snk;
  PointMatrix ps(d, static_cast<Eigen::Index>(src.size())), pt(d, static_cast<Eigen::Index>(snk.size()));
  for (std::size_t i = 0; i < src.size(); ++i) {
    ps.col(static_cast<Eigen::Index>(i)) = cloud.points.col(src[i]);
    supply.push_back(sign * cloud.mass[static_cast<std::size_t>(src[i])]);
    cap_src.push_back(std::max(0.0, r - ps.col(static_cast<Eigen::Index>(i)).norm()));
  }
  for (std::size_t j = 0; j < snk.size(); ++j) {
    pt.col(static_cast<Eigen::Index>(j)) = cloud.points.col(snk[j]);
    demand.push_back(-sign * cloud.mass[static_cast<std::size_t>(snk[j])]);
    cap_snk.push_back(std::max(0.0, r - pt.col(static_cast<Eigen::Index>(j)).norm()));
  }
  const int L = static_cast<int>(src.size()), R = static_cast<int>(snk.size());
  const double* a = ps.data();
  const double* b = pt.data();
  auto dist = [&](int i, int j) {
    double s = 0.0;
    for (Eigen::Index k = 0; k < d; ++k) {
      const double t = a[i * d + k] - b[j * d + k];
      s += t * t;
    }
    return std::sqrt(s);
  };
  auto cost = [&](int i, int j) -> double {
    if (i == L) return 0.0;
    if (j == R) return cap_src[static_cast<std::size_t>(i)];
    return dist(i, j);
  };
  const auto sol = detail::solve_hub_transport(supply, demand, cost);

  // Lipschitz witness: clamp the dual on sources, take the smallest
  // admissible sink values, then the largest admissible source values.
  std::vector<double> f(static_cast<std::size_t>(L)), g(static_cast<std::size_t>(R), 0.0);
  for (int i = 0; i < L; ++i) f[static_cast<std::size_t>(i)] = std::clamp(-sol.left_potential[static_cast<std::size_t>(i)], 0.0, cap_src[static_cast<std::size_t>(i)]);
  for (int j = 0; j < R; ++j) {
    double v = 0.0;
    for (int i = 0; i < L; ++i) v = std::max(v, f[static_cast<std::size_t>(i)] - dist(i, j));
    g[static_cast<std::size_t>(j)] = std::min(v, cap_snk[static_cast<std::size_t>(j)]);
  }
  double witness = 0.0;
  for (int i = 0; i < L; ++i) {
    double v = cap_src[static_cast<std::size_t>(i)];
    for (int j = 0; j < R; ++j) v = std::min(v, g[static_cast<std::size_t>(j)] + dist(i, j));
    witness += supply[static_cast<std::size_t>(i)] * v;
  }
  for (int j = 0; j < R; ++j) witness -= demand[static_cast<std::size_t>(j)] * g[static_cast<std::size_t>(j)];
  return {sol.cost, witness, sol.pivots};
}

void require_same_dim(const DiscreteMeasure& a, const DiscreteMeasure& b) {
  if (a.empty() || b.empty()) throw InputError("measure distance: empty measure");
  if (a.dim() != b.dim()) throw InputError("measure distance: dimension mismatch");
}

}  // namespace

RescaledMeasure rescale(const DiscreteMeasure& mu, const MetricField* field, const Vec& x, double r) {
  require_positive_radius(r, "rescale");
  if (mu.empty()) throw InputError("rescale: empty measure");
  if (x.size() != mu.dim()) throw InputError("rescale: center dimension");
  Mat a = Mat::Identity(mu.dim(), mu.dim()) / r;
  const bool aniso = field != nullptr && !field->is_identity();
  if (field != nullptr && field->ambient_dim() != mu.dim()) throw InputError("rescale: field dimension");
  if (aniso) a = field->eval(x).inverse() / r;
  const auto mapped = mu.pushforward_affine(a, -(a * x), 1.0);
  const double mass = mapped.ball_mass(Vec::Zero(mu.dim()), 1.0);
  if (!(mass > 0.0)) throw DomainError("rescale: no mass in the rescaling ball");
  RescaledMeasure out;
  out.center = x;
  out.r = r;
  out.anisotropic = aniso;
  out.normalizer = mass;
  out.measure = mapped.with_weights(mapped.weights() / mass);
  return out;
}

CompositionAudit composition_audit(const DiscreteMeasure& mu, const MetricField* field, const Vec& x, double r,
                                   double s) {
  require_positive_radius(s, "composition audit");
  const auto first = rescale(mu, field, x, r);
  const auto twice = rescale(first.measure, nullptr, Vec::Zero(mu.dim()), s);
  const auto direct = rescale(mu, field, x, r * s);
  CompositionAudit out;
  const auto& p = twice.measure.points();
  const auto& q = direct.measure.points();
  for (Eigen::Index i = 0; i < p.cols(); ++i) {
    out.max_point_error = std::max(out.max_point_error, (p.col(i) - q.col(i)).norm() / std::max(1.0, q.col(i).norm()));
    const double wq = direct.measure.weights()(i);
    out.max_weight_error = std::max(out.max_weight_error, std::abs(twice.measure.weights()(i) - wq) / wq);
  }
  out.f1 = fr_distance(twice.measure, direct.measure, 1.0);
  return out;
}

nlohmann::json FrResult::to_json() const {
  return {{"value", value},       {"quantization_error", quantization_error},
          {"duality_gap", duality_gap}, {"pivots", pivots},
          {"sources", sources},   {"sinks", sinks},
          {"quantized", quantized}};
}

FrResult fr_distance_detailed(const DiscreteMeasure& nu1, const DiscreteMeasure& nu2, double r, const FrOptions& opts) {
  require_positive_radius(r, "F_r distance");
  require_same_dim(nu1, nu2);
  if (opts.cap_per_side < 1) throw InputError("F_r distance: cap must be positive");
  const Vec origin = Vec::Zero(nu1.dim());
  const auto i1 = nu1.indices_in_ball(origin, r);
  const auto i2 = nu2.indices_in_ball(origin, r);
  PointMatrix pts(nu1.dim(), static_cast<Eigen::Index>(i1.size() + i2.size()));
  std::vector<double> c;
  Eigen::Index col = 0;
  for (std::size_t i : i1) {
    pts.col(col++) = nu1.point(i);
    c.push_back(nu1.weights()(static_cast<Eigen::Index>(i)));
  }
  for (std::size_t i : i2) {
    pts.col(col++) = nu2.point(i);
    c.push_back(-nu2.weights()(static_cast<Eigen::Index>(i)));
  }
  FrResult out;
  if (c.empty()) return out;
  auto cloud = merge_coincident(pts, c);

  auto side_counts = [](const SignedCloud& sc) {
    std::size_t pos = 0, neg = 0;
    for (double m : sc.mass) (m > 0.0 ? pos : neg)++;
    return std::pair{pos, neg};
  };
  auto [pos, neg] = side_counts(cloud);
  if (pos > opts.cap_per_side || neg > opts.cap_per_side) {
    // Move both measures onto shared centers; each unit of mass moved by t
    // changes any 1-Lipschitz integral by at most t.
    std::vector<std::size_t> owner;
    std::vector<double> owner_distance;
    const auto centers = farthest_point_sample(pts, opts.cap_per_side, 0, &owner, &owner_distance);
    PointMatrix cp(pts.rows(), static_cast<Eigen::Index>(centers.size()));
    for (std::size_t k = 0; k < centers.size(); ++k) cp.col(static_cast<Eigen::Index>(k)) = pts.col(static_cast<Eigen::Index>(centers[k]));
    std::vector<double> cc(centers.size(), 0.0);
    for (std::size_t k = 0; k < c.size(); ++k) {
      cc[owner[k]] += c[k];
      out.quantization_error += std::abs(c[k]) * owner_distance[k];
    }
    cloud = merge_coincident(cp, cc);
    out.quantized = true;
    std::tie(pos, neg) = side_counts(cloud);
  }
  out.sources = pos;
  out.sinks = neg;
  const auto plus = solve_signed(cloud, r, 1.0);
  const auto minus = solve_signed(cloud, r, -1.0);
  const auto& best = plus.value >= minus.value ? plus : minus;
  out.value = best.value;
  out.duality_gap = best.value - best.witness;
  out.pivots = plus.pivots + minus.pivots;
  return out;
}

double fr_distance(const DiscreteMeasure& nu1, const DiscreteMeasure& nu2, double r, const FrOptions& opts) {
  return fr_distance_detailed(nu1, nu2, r, opts).value;
}

nlohmann::json FDistance::to_json() const {
  return {{"value", value},
          {"terms", terms},
          {"truncation_bound", finite_or_null(truncation_bound)},
          {"quantization_error", quantization_error}};
}

FDistance f_distance(const DiscreteMeasure& nu1, const DiscreteMeasure& nu2, int k_max, const FrOptions& opts) {
  if (k_max < 1) throw InputError("F distance: k_max must be >= 1");
  require_same_dim(nu1, nu2);
  FDistance out;
  for (int k = 1; k <= k_max; ++k) {
    const auto term = fr_distance_detailed(nu1, nu2, std::ldexp(1.0, k), opts);
    out.terms.push_back(term.value);
    out.value += std::ldexp(term.value, -k);
    out.quantization_error += std::ldexp(term.quantization_error, -k);
  }
  // With equal masses, phi minus its minimum over the joint support lies in
  // [0, D], so every F_r <= M D and the tail is at most 2^{-k_max} M D.
  const double m1 = nu1.total_mass(), m2 = nu2.total_mass();
  const double big = std::max(m1, m2);
  if (std::abs(m1 - m2) > 1e-12 * big) {
    out.truncation_bound = std::numeric_limits<double>::infinity();
  } else {
    double radius = 0.0;
    for (const auto* nu : {&nu1, &nu2}) radius = std::max(radius, nu->points().colwise().norm().maxCoeff());
    out.truncation_bound = std::ldexp(big * 2.0 * radius, -k_max);
  }
  return out;
}

FlatFunctionalResult flatness_functional(const DiscreteMeasure& nu, int m) {
  if (nu.empty()) throw InputError("flatness functional: empty measure");
  const int d = nu.dim();
  if (m < 1 || m > d) throw InputError("flatness functional: need 1 <= m <= d");
  const Vec origin = Vec::Zero(d);
  if (nu.nearest(origin).second > 1e-6) throw PreconditionError("flatness functional: 0 is not in the support");
  FlatFunctionalResult out;
  out.unit_mass = nu.ball_mass(origin, 1.0);
  if (!(out.unit_mass > 0.0)) throw DomainError("flatness functional: nu(B(0,1)) = 0");
  Mat moment = Mat::Zero(d, d);
  for (std::size_t i : nu.indices_in_ball(origin, out.kernel.outer)) {
    const Vec z = nu.point(i);
    const double w = nu.weights()(static_cast<Eigen::Index>(i)) * out.kernel(z.norm());
    if (w > 0.0) moment.noalias() += w * z * z.transpose();
  }
  const Eigen::SelfAdjointEigenSolver<Mat> eig(moment);
  out.value = std::max(0.0, eig.eigenvalues().head(d - m).sum()) / out.unit_mass;
  out.plane = Plane::through(origin, eig.eigenvectors().rightCols(m));
  return out;
}

std::vector<TrajectoryPoint> tangent_flatness_trajectory(const DiscreteMeasure& nu, int m,
                                                         const std::vector<double>& R_grid) {
  if (R_grid.empty()) throw InputError("trajectory: empty R grid");
  std::vector<TrajectoryPoint> out;
  const Vec origin = Vec::Zero(nu.dim());
  for (double R : R_grid) {
    const auto scaled = rescale(nu, nullptr, origin, R);
    out.push_back({R, flatness_functional(scaled.measure, m).value});
  }
  return out;
}

UniformityDefect uniformity_defect(const DiscreteMeasure& nu, const PointMatrix& centers,
                                   const std::vector<double>& scales, int m) {
  if (centers.cols() == 0 || scales.empty()) throw InputError("uniformity defect: empty grid");
  if (m < 1) throw InputError("uniformity defect: m must be >= 1");
  std::vector<double> ratio;
  for (Eigen::Index k = 0; k < centers.cols(); ++k)
    for (double r : scales) {
      require_positive_radius(r, "uniformity defect");
      const double mass = nu.ball_mass(centers.col(k), r);
      if (!(mass > 0.0)) throw DomainError("uniformity defect: zero mass at a grid ball");
      ratio.push_back(mass / std::pow(r, m));
    }
  double log_sum = 0.0;
  for (double q : ratio) log_sum += std::log(q);
  UniformityDefect out;
  out.c_fit = std::exp(log_sum / static_cast<double>(ratio.size()));
  for (double q : ratio) out.sup_defect = std::max(out.sup_defect, std::abs(q / out.c_fit - 1.0));
  return out;
}

ConicalityDefect conicality_defect(const DiscreteMeasure& nu, int m, const std::vector<double>& r_grid,
                                   const FrOptions& opts) {
  if (m < 1) throw InputError("conicality defect: m must be >= 1");
  if (r_grid.empty()) throw InputError("conicality defect: empty r grid");
  const Vec origin = Vec::Zero(nu.dim());
  auto unit_part = [&](const DiscreteMeasure& mu) {
    const auto idx = mu.indices_in_ball(origin, 1.0);
    if (idx.empty()) throw DomainError("conicality defect: no mass in B(0,1)");
    const auto part = mu.subset(idx);
    return part.with_weights(part.weights() / part.total_mass());
  };
  const auto base = unit_part(nu);
  ConicalityDefect out;
  for (double r : r_grid) {
    require_positive_radius(r, "conicality defect");
    const auto scaled = unit_part(nu.pushforward_affine(Mat::Identity(nu.dim(), nu.dim()) / r, origin, 1.0));
    const auto f = fr_distance_detailed(base, scaled, 1.0, opts);
    out.per_scale.push_back(f.value);
    out.value = std::max(out.value, f.value);
    out.quantization_error = std::max(out.quantization_error, f.quantization_error);
  }
  return out;
}

}  // namespace gmt
