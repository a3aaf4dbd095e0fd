#include "gmt/density.hpp"

#include <cmath>
#include <mutex>
#include <numeric>
#include <sstream>

namespace gmt {

namespace {

void require_scales(const std::vector<double>& scales) {
  if (scales.empty()) throw InputError("density profile: no scales");
  for (std::size_t i = 0; i < scales.size(); ++i) {
    require_positive_radius(scales[i], "density profile");
    if (i > 0 && !(scales[i] < scales[i - 1]))
      throw InputError("density profile: scales must be strictly decreasing");
  }
}

nlohmann::json vec_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

}  // namespace

double DensityProfile::sup_defect() const {
  double s = 0.0;
  for (double q : ratios) s = std::max(s, std::abs(q - 1.0));
  return s;
}

nlohmann::json DensityProfile::to_json() const {
  nlohmann::json j{{"center", vec_json(center)}, {"scales", scales}, {"ratios", ratios}};
  j["fitted_alpha"] = std::isfinite(fitted_alpha) ? nlohmann::json(fitted_alpha) : nlohmann::json(nullptr);
  j["fitted_C"] = std::isfinite(fitted_C) ? nlohmann::json(fitted_C) : nlohmann::json(nullptr);
  return j;
}

DensityProfile density_profile(const DiscreteMeasure& mu, const MetricField& field, const Vec& x,
                               const std::vector<double>& scales, int n) {
  require_scales(scales);
  if (n < 1) throw InputError("density profile: n must be >= 1");
  DensityProfile out;
  out.center = mu.point(mu.snap(x));
  out.scales = scales;
  const double omega = unit_ball_volume(n);
  std::vector<double> defects;
  for (double r : scales) {
    const double m = mu.ellipse_mass(field, out.center, r);
    if (!(m > 0.0)) {
      std::ostringstream msg;
      msg << "density profile: zero mass at scale " << r << " (center not in numerical support)";
      throw DomainError(msg.str());
    }
    out.ratios.push_back(m / (omega * std::pow(r, n)));
    defects.push_back(std::abs(out.ratios.back() - 1.0));
  }
  try {
    const auto fit = fit_power_law(scales, defects);
    out.fitted_alpha = fit.exponent;
    out.fitted_C = fit.coefficient;
  } catch (const DegenerateError&) {
    // no defect information; fit stays NaN
  }
  return out;
}

nlohmann::json DoublingDefect::to_json() const {
  return {{"center", vec_json(center)}, {"r", r}, {"t_grid", t_grid}, {"defects", defects}, {"sup_defect", sup_defect}};
}

std::vector<double> default_t_grid() {
  std::vector<double> t;
  for (int i = 0; i <= 16; ++i) t.push_back(0.5 + 0.5 * i / 16.0);
  return t;
}

DoublingDefect doubling_defect(const DiscreteMeasure& mu, const MetricField& field, const Vec& x, double r,
                               const std::vector<double>& t_grid, int n) {
  require_positive_radius(r, "doubling defect");
  if (t_grid.empty()) throw InputError("doubling defect: empty t grid");
  for (double t : t_grid)
    if (!(t > 0.0 && t <= 1.0)) throw InputError("doubling defect: t must lie in (0, 1]");
  DoublingDefect out;
  out.center = mu.point(mu.snap(x));
  out.r = r;
  out.t_grid = t_grid;
  const double denom = mu.ellipse_mass(field, out.center, r);
  if (!(denom > 0.0)) throw DomainError("doubling defect: zero mass in the outer ellipse");
  for (double t : t_grid) {
    const double d = std::abs(mu.ellipse_mass(field, out.center, t * r) / denom - std::pow(t, n));
    out.defects.push_back(d);
    out.sup_defect = std::max(out.sup_defect, d);
  }
  return out;
}

double ThetaEstimate::cauchy_spread(int k_from) const {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (int k = std::max(k_from, k_min); k <= k_max; ++k) {
    const double l = l_sequence[static_cast<std::size_t>(k - k_min)];
    lo = std::min(lo, l);
    hi = std::max(hi, l);
  }
  return hi >= lo ? hi - lo : 0.0;
}

ThetaEstimate theta_lambda(const DiscreteMeasure& mu, const MetricField& field, const Vec& x, int n, int k_min,
                           int k_max) {
  if (k_min > k_max) throw InputError("theta: empty k range");
  if (n < 1) throw InputError("theta: n must be >= 1");
  const Vec c = mu.point(mu.snap(x));
  ThetaEstimate out;
  out.k_min = k_min;
  out.k_max = k_max;
  const double omega = unit_ball_volume(n);
  for (int k = k_min; k <= k_max; ++k) {
    const double r = std::ldexp(1.0, -k);
    const double m = mu.ellipse_mass(field, c, r);
    if (!(m > 0.0)) throw DomainError("theta: zero mass at k = " + std::to_string(k));
    out.l_sequence.push_back(std::log(m / (omega * std::pow(r, n))));
  }
  out.theta = std::exp(out.l_sequence.back());
  return out;
}

DiscreteMeasure normalize_by_density(const DiscreteMeasure& mu, const MetricField& field, int n,
                                     const NormalizeOptions& opts) {
  if (mu.empty()) throw InputError("normalize: empty measure");
  const std::size_t count = std::min(mu.size(), std::max<std::size_t>(opts.max_evaluations, 1));
  std::vector<std::size_t> owner;
  std::vector<std::size_t> probes;
  if (count == mu.size()) {
    probes.resize(count);
    std::iota(probes.begin(), probes.end(), std::size_t{0});
  } else {
    probes = farthest_point_sample(mu.points(), count, 0, &owner);
  }

  std::vector<double> theta(count, 0.0);
  std::vector<std::size_t> failed;
  std::mutex failed_mutex;
  parallel_for(count, [&](std::size_t i) {
    try {
      theta[i] = theta_lambda(mu, field, mu.point(probes[i]), n, opts.k_min, opts.k_max).theta;
    } catch (const DomainError&) {
      std::lock_guard lock(failed_mutex);
      failed.push_back(probes[i]);
    }
  });
  if (!failed.empty()) {
    std::sort(failed.begin(), failed.end());
    std::ostringstream msg;
    msg << "normalize: theta failed at " << failed.size() << " point(s):";
    for (std::size_t k = 0; k < std::min<std::size_t>(failed.size(), 20); ++k) msg << ' ' << failed[k];
    if (failed.size() > 20) msg << " ...";
    throw DomainError(msg.str());
  }

  Vec w = mu.weights();
  if (count == mu.size()) {
    for (std::size_t i = 0; i < count; ++i) w(static_cast<Eigen::Index>(i)) /= theta[i];
  } else {
    for (std::size_t i = 0; i < mu.size(); ++i) w(static_cast<Eigen::Index>(i)) /= theta[owner[i]];
  }
  return mu.with_weights(std::move(w));
}

}  // namespace gmt
