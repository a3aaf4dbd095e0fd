#include "gmt/moments.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

namespace gmt {

namespace {

nlohmann::json vec_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

nlohmann::json mat_json(const Mat& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vec_json(m.row(i).transpose()));
  return rows;
}

}  // namespace

Mat TildeFrame::tilde_field(const Vec& y) const { return forward * field.eval(backward * y).entries(); }

TildeFrame tilde_transform(const DiscreteMeasure& mu, const MetricField& field, const Vec& x0) {
  if (field.ambient_dim() != mu.dim()) throw InputError("tilde transform: field and measure dimensions differ");
  const Vec x = mu.point(mu.snap(x0));
  const SpdMatrix lam = field.eval(x);
  const Mat inv = lam.inverse();
  return TildeFrame{x,
                    inv * x,
                    inv,
                    lam.entries(),
                    mu.pushforward_affine(inv, Vec::Zero(mu.dim()), 1.0),
                    field};
}

nlohmann::json MomentData::to_json() const {
  return {{"r", r}, {"n", n}, {"b", vec_json(b)}, {"Q", mat_json(Q)}, {"trQ", trQ}, {"mass", mass}, {"points", points}};
}

MomentData moments(const TildeFrame& frame, double r, int n) {
  require_positive_radius(r, "moments");
  if (n < 1) throw InputError("moments: n must be >= 1");
  const auto& mu = frame.tilde_measure;
  const auto idx = mu.indices_in_ball(frame.y0, r);
  const Eigen::Index d = mu.dim();
  MomentData out;
  out.r = r;
  out.n = n;
  out.b = Vec::Zero(d);
  out.Q = Mat::Zero(d, d);
  double tr = 0.0;
  for (std::size_t i : idx) {
    const double w = mu.weights()(static_cast<Eigen::Index>(i));
    const Vec z = mu.point(i) - frame.y0;
    const double z2 = z.squaredNorm();
    out.b += w * (r * r - z2) * z;
    out.Q.noalias() += w * z * z.transpose();
    tr += w * z2;
    out.mass += w;
  }
  if (!(out.mass > 0.0)) throw DomainError("moments: no mass in B(Y0, r)");
  out.points = idx.size();
  const double c = (n + 2) / (unit_ball_volume(n) * std::pow(r, n + 2));
  out.b *= 0.5 * c;
  out.Q *= c;
  out.Q = (0.5 * (out.Q + out.Q.transpose())).eval();
  out.trQ = c * tr;
  return out;
}

nlohmann::json ResidualTable::to_json() const {
  nlohmann::json rj = nlohmann::json::array();
  for (const auto& row : rows)
    rj.push_back({{"y", vec_json(row.y)}, {"lhs", row.lhs}, {"bound_shape", row.bound_shape}, {"ratio", row.ratio}});
  return {{"moments", data.to_json()},
          {"rows", rj},
          {"fitted_constant", fitted_constant},
          {"residual_exponent", std::isfinite(residual_exponent) ? nlohmann::json(residual_exponent) : nlohmann::json(nullptr)},
          {"residual_coefficient",
           std::isfinite(residual_coefficient) ? nlohmann::json(residual_coefficient) : nlohmann::json(nullptr)},
          {"trace_defect", trace_defect},
          {"trace_ratio", trace_ratio}};
}

std::string ResidualTable::to_csv() const {
  std::ostringstream out;
  out << std::setprecision(17);
  const Eigen::Index d = data.b.size();
  for (Eigen::Index k = 0; k < d; ++k) out << 'y' << k + 1 << ',';
  out << "lhs,bound_shape,ratio\n";
  for (const auto& row : rows) {
    for (Eigen::Index k = 0; k < d; ++k) out << row.y(k) << ',';
    out << row.lhs << ',' << row.bound_shape << ',' << row.ratio << '\n';
  }
  return out.str();
}

PointMatrix admissible_test_points(const TildeFrame& frame, double r, std::size_t max_count) {
  require_positive_radius(r, "test points");
  const auto& mu = frame.tilde_measure;
  const auto idx = mu.indices_in_ball(frame.y0, 0.5 * r);
  PointMatrix pts(mu.dim(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) pts.col(static_cast<Eigen::Index>(k)) = mu.point(idx[k]);
  if (idx.size() <= max_count) return pts;
  const auto pick = farthest_point_sample(pts, max_count);
  PointMatrix out(mu.dim(), static_cast<Eigen::Index>(pick.size()));
  for (std::size_t k = 0; k < pick.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = pts.col(static_cast<Eigen::Index>(pick[k]));
  return out;
}

ResidualTable moment_residuals(const TildeFrame& frame, double r, int n, const PointMatrix& test_points,
                               const ResidualOptions& opts) {
  if (test_points.cols() == 0) throw DomainError("moment residuals: no admissible test points");
  if (!(opts.alpha > 0.0) || !(opts.beta > 0.0)) throw InputError("moment residuals: exponents must be positive");
  ResidualTable out;
  out.data = moments(frame, r, n);
  const double floor_term = std::pow(r, 2.0 + std::min(opts.alpha, opts.beta));
  for (Eigen::Index k = 0; k < test_points.cols(); ++k) {
    const Vec y = test_points.col(k);
    const Vec v = y - frame.y0;
    if (!(v.norm() < 0.5 * r * (1.0 + 1e-12))) throw DomainError("moment residuals: test point outside B(Y0, r/2)");
    frame.tilde_measure.snap(y);  // off-support points throw
    ResidualRow row{y, std::abs(2.0 * out.data.b.dot(v) + out.data.quadratic(v) - v.squaredNorm()),
                    std::pow(v.norm(), 3) / r + floor_term, 0.0};
    row.ratio = row.lhs / row.bound_shape;
    out.fitted_constant = std::max(out.fitted_constant, row.ratio);
    out.rows.push_back(std::move(row));
  }
  std::vector<double> dist, lhs;
  for (const auto& row : out.rows) {
    const double q = (row.y - frame.y0).norm();
    if (q >= 0.125 * r) {
      dist.push_back(q);
      lhs.push_back(row.lhs);
    }
  }
  try {
    const auto fit = fit_power_law(dist, lhs, 1e-14, 3);
    out.residual_exponent = fit.exponent;
    out.residual_coefficient = fit.coefficient;
  } catch (const DegenerateError&) {
    // exact data (all residuals zero) or too few rows
  }
  out.trace_defect = std::abs(out.data.trQ - n);
  out.trace_ratio = out.trace_defect / std::pow(r, opts.alpha);
  return out;
}

}  // namespace gmt
