#include "gmt/verify.hpp"

#include "gmt/blowup.hpp"
#include "gmt/classify.hpp"
#include "gmt/flatness.hpp"
#include "gmt/metric_field.hpp"
#include "gmt/moments.hpp"
#include "gmt/synth.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <random>

namespace gmt::verify {

namespace {

double unif(std::mt19937_64& g, double a, double b) {
  return a + (b - a) * static_cast<double>(g() >> 11) * 0x1.0p-53;
}

Vec random_point(std::mt19937_64& g, int d, double scale) {
  Vec x(d);
  for (int i = 0; i < d; ++i) x(i) = unif(g, -scale, scale);
  return x;
}

Mat diag(std::initializer_list<double> v) {
  Vec d(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) d(i++) = x;
  return d.asDiagonal();
}

DiscreteMeasure surface(decltype(synth::SurfaceSpec::kind) kind, std::size_t samples) {
  synth::SurfaceSpec spec;
  spec.kind = std::move(kind);
  spec.samples = samples;
  return synth::sample(spec);
}

SuiteResult timed(const std::string& name, const std::function<bool(nlohmann::json&)>& body) {
  SuiteResult out;
  out.name = name;
  const auto t0 = std::chrono::steady_clock::now();
  out.pass = body(out.details);
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

}  // namespace

nlohmann::json SuiteResult::to_json() const {
  return {{"suite", name}, {"pass", pass}, {"details", details}};
}

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = {"eigenvalue-bounds",     "ellipse-nesting", "flatness-comparison",
                                                 "moment-residuals",      "cone-gap",        "rescaling-uniformity",
                                                 "blowup-composition"};
  return names;
}

SuiteResult eigenvalue_bounds(std::uint64_t seed) {
  // |lambda_min(A) - lambda_min(B)| and |lambda_max(A) - lambda_max(B)| are
  // both at most |A - B| in operator norm.
  return timed("eigenvalue-bounds", [&](nlohmann::json& out) {
    std::mt19937_64 rng(seed);
    const std::vector<std::pair<std::string, MetricField>> fields = {
        {"identity", MetricField::identity(3)},
        {"constant", MetricField::constant(diag({2.0, 1.0, 0.5}))},
        {"sinusoidal", MetricField::sinusoidal(diag({2.0, 1.5, 1.0}), 0.8, diag({1.0, -1.0, 0.5}), 4.0, 0.5)},
    };
    bool ok = true;
    out["fields"] = nlohmann::json::array();
    for (const auto& [name, f] : fields) {
      const int pairs = 10000;
      int violations = 0;
      double slack = -std::numeric_limits<double>::infinity();
      for (int p = 0; p < pairs; ++p) {
        const SpdMatrix a = f.eval(random_point(rng, 3, 2.0));
        const SpdMatrix b = f.eval(random_point(rng, 3, 2.0));
        const double norm = sym_operator_norm(a.entries() - b.entries());
        for (double gap : {std::abs(a.lambda_min() - b.lambda_min()), std::abs(a.lambda_max() - b.lambda_max())}) {
          slack = std::max(slack, gap - norm);
          if (gap > norm + 1e-9) ++violations;
        }
      }
      ok = ok && violations == 0;
      out["fields"].push_back({{"field", name}, {"pairs", pairs}, {"violations", violations}, {"max_excess", slack}});
    }
    return ok;
  });
}

SuiteResult ellipse_nesting(std::uint64_t seed) {
  return timed("ellipse-nesting", [&](nlohmann::json& out) {
    std::mt19937_64 rng(seed + 1);
    struct Case {
      std::string name;
      MetricField field;
      CompactBounds bounds;
    };
    // For the sinusoidal field |Lambda(X) - Lambda(Y)| <= a f sqrt2 |X - Y|,
    // which is below a f sqrt2 |X - Y|^beta once |X - Y| <= 1.
    const std::vector<Case> cases = {
        {"constant diag(2,1)", MetricField::constant(diag({2.0, 1.0})), CompactBounds::from_extremes(1.0, 2.0, 0.0)},
        {"sinusoidal", MetricField::sinusoidal(diag({2.0, 1.0}), 0.5, Mat::Identity(2, 2), 2.0, 0.9),
         CompactBounds::from_extremes(0.5, 2.5, 0.5 * 2.0 * std::sqrt(2.0))},
    };
    const int configs = 10, samples = 10000;
    auto sample_ellipse = [&](const MetricField& f, const Vec& x, double r) {
      const Mat m = f.eval(x).entries();
      std::vector<Vec> pts;
      pts.reserve(samples);
      while (static_cast<int>(pts.size()) < samples) {
        const Vec w = random_point(rng, 2, r);
        if (w.norm() < r) pts.push_back(x + m * w);
      }
      return pts;
    };
    bool ok = true;
    out["configurations"] = nlohmann::json::array();
    for (const auto& c : cases) {
      for (int k = 0; k < configs; ++k) {
        const Vec x = random_point(rng, 2, 1.0);
        const double r = 0.05 + 0.2 * std::abs(unif(rng, -1.0, 1.0));
        const Vec y = x + random_point(rng, 2, 0.3 * r);
        const NestedRadii nr = nested_radii(c.field, x, y, r, c.bounds);
        int outer = 0, inner = 0;
        for (const Vec& z : sample_ellipse(c.field, x, r))
          if (!ellipse_contains(c.field, y, nr.outer, z)) ++outer;
        if (nr.inner)
          for (const Vec& z : sample_ellipse(c.field, y, *nr.inner))
            if (!ellipse_contains(c.field, x, r, z)) ++inner;
        ok = ok && outer == 0 && inner == 0;
        nlohmann::json row = {{"field", c.name}, {"r", r},          {"outer_radius", nr.outer},
                              {"samples", samples}, {"outer_violations", outer}};
        if (nr.inner) {
          row["inner_radius"] = *nr.inner;
          row["inner_violations"] = inner;
        } else {
          row["inner_radius"] = nullptr;
        }
        out["configurations"].push_back(row);
      }
    }
    return ok;
  });
}

SuiteResult flatness_comparison(std::uint64_t seed) {
  // Random lines through the origin region, tilted, under the constant field
  // diag(2, 1); each configuration picks a plane a little off the data.
  return timed("flatness-comparison", [&](nlohmann::json& out) {
    std::mt19937_64 rng(seed + 2);
    const auto field = MetricField::constant(diag({2.0, 1.0}));
    const auto bounds = CompactBounds::from_extremes(1.0, 2.0, 0.0);
    const int configs = 100;
    int passed = 0, met_one = 0, met_two = 0;
    for (int q = 0; q < configs; ++q) {
      const double tilt = unif(rng, -0.3, 0.3);
      synth::SurfaceSpec inner;
      inner.kind = synth::PlaneSpec{1, 2, 4.0};
      inner.samples = 20000;
      synth::AffineImageSpec img;
      img.inner = std::make_shared<const synth::SurfaceSpec>(inner);
      img.matrix = Eigen::Rotation2Dd(tilt).toRotationMatrix();
      img.shift = Vec::Zero(2);
      synth::SurfaceSpec spec;
      spec.kind = img;
      spec.samples = 20000;
      const auto mu = synth::sample(spec);
      const Vec x = mu.point(mu.nearest(Vec::Constant(2, unif(rng, -0.3, 0.3))).first);
      const double r = unif(rng, 0.05, 0.3);
      const double off = unif(rng, -0.1, 0.1);
      const Vec dir(Eigen::Vector2d(std::cos(tilt + off), std::sin(tilt + off)));
      const double delta = unif(rng, 0.01, 0.49);
      const auto rec = flatness_comparison_check(field, mu, x, r, Plane::through(x, dir), delta, bounds);
      passed += rec.pass();
      met_one += rec.euclidean_to_anisotropic.hypothesis_met;
      met_two += rec.anisotropic_to_euclidean.hypothesis_met;
    }
    out = {{"configurations", configs},
           {"passed", passed},
           {"euclidean_to_anisotropic_hypotheses_met", met_one},
           {"anisotropic_to_euclidean_hypotheses_met", met_two}};
    // Both directions must actually be exercised.
    return passed == configs && met_one > 0 && met_two > 0;
  });
}

SuiteResult moment_residuals(std::uint64_t seed) {
  (void)seed;
  return timed("moment-residuals", [&](nlohmann::json& out) {
    bool ok = true;
    const std::vector<double> radii = {0.1, 0.2, 0.4};

    // Plane: b = 0, tr Q = n and the residual vanishes on the plane.
    const auto plane = surface(synth::PlaneSpec{2, 3, 1.0}, 250000);
    const auto pf = tilde_transform(plane, MetricField::identity(3), plane.point(plane.nearest(Vec::Zero(3)).first));
    out["plane"] = nlohmann::json::array();
    for (double r : radii) {
      const auto table = gmt::moment_residuals(pf, r, 2, admissible_test_points(pf, r, 128));
      double worst = 0.0;
      for (const auto& row : table.rows) worst = std::max(worst, std::abs(row.lhs));
      const bool good = table.data.b.norm() <= 0.01 * r && std::abs(table.data.trQ - 2.0) <= 0.05 &&
                        worst <= 0.01 * r * r;
      ok = ok && good;
      out["plane"].push_back({{"r", r},
                              {"b_over_r", table.data.b.norm() / r},
                              {"trace_defect", std::abs(table.data.trQ - 2.0)},
                              {"max_residual_over_r2", worst / (r * r)},
                              {"pass", good}});
    }

    // Sphere cap around the pole: residual ~ c s^4 with c = 1/4 - r^2/8.
    synth::SphereSpec cap{1.0, 3, std::acos(0.9), true};
    const auto sphere = surface(cap, 3 * 40000 + 1);
    const auto sf = tilde_transform(sphere, MetricField::identity(3), Vec::Unit(3, 2));
    std::vector<double> coefficient;
    out["sphere"] = nlohmann::json::array();
    for (double r : radii) {
      const auto table = gmt::moment_residuals(sf, r, 2, admissible_test_points(sf, r, 128));
      coefficient.push_back(table.residual_coefficient);
      ok = ok && std::abs(table.residual_exponent - 4.0) <= 0.04;
      out["sphere"].push_back({{"r", r},
                               {"residual_coefficient", table.residual_coefficient},
                               {"residual_exponent", table.residual_exponent},
                               {"fitted_constant", table.fitted_constant}});
    }
    const auto [lo, hi] = std::minmax_element(coefficient.begin(), coefficient.end());
    const bool stable = std::isfinite(*lo) && *lo > 0.0 && *hi <= 1.2 * *lo;
    out["sphere_coefficient_spread"] = *hi / *lo;
    return ok && stable;
  });
}

SuiteResult cone_gap(std::uint64_t seed) {
  (void)seed;
  return timed("cone-gap", [&](nlohmann::json& out) {
    const auto gap = cone_plane_gap(32);
    out = gap.to_json();
    return gap.minimum >= 0.69 && std::abs(gap.witness - 1.0 / std::sqrt(2.0)) <= 0.02;
  });
}

SuiteResult rescaling_uniformity(std::uint64_t seed) {
  (void)seed;
  // Rescalings of flat and conical measures are again uniform, with constant
  // 1 after the unit-ball normalization.
  return timed("rescaling-uniformity", [&](nlohmann::json& out) {
    bool ok = true;
    auto check = [&](const std::string& name, const RescaledMeasure& res, const PointMatrix& centers,
                     const std::vector<double>& scales, int m, double tol) {
      const auto u = uniformity_defect(res.measure, centers, scales, m);
      const bool good = u.sup_defect <= tol && std::abs(u.c_fit - 1.0) <= tol;
      ok = ok && good;
      out[name] = {{"sup_defect", u.sup_defect}, {"c_fit", u.c_fit}, {"tolerance", tol}, {"pass", good}};
    };

    const auto plane = surface(synth::PlaneSpec{2, 3, 2.0}, 200000);
    const Vec x = plane.point(plane.nearest(Vec::Zero(3)).first);
    const std::vector<double> scales = {0.1, 0.2, 0.4};
    PointMatrix pc(3, 9);
    const auto euclid = rescale(plane, nullptr, x, 0.5);
    for (int i = -1, k = 0; i <= 1; ++i)
      for (int j = -1; j <= 1; ++j, ++k)
        pc.col(k) = euclid.measure.point(euclid.measure.nearest(Vec(Eigen::Vector3d(0.4 * i, 0.4 * j, 0.0))).first);
    check("plane", euclid, pc, scales, 2, 0.03);

    // diag(2, 1, 1) maps the plane onto itself with a stretched density.
    const auto field = MetricField::constant(diag({2.0, 1.0, 1.0}));
    const auto aniso = rescale(plane, &field, x, 0.5);
    for (int k = 0; k < 9; ++k) pc.col(k) = aniso.measure.point(aniso.measure.nearest(pc.col(k)).first);
    check("plane_anisotropic", aniso, pc, scales, 2, 0.03);

    const auto cone = surface(synth::ConeSpec{0.75, 0.0}, 1000000);
    const auto at_apex = rescale(cone, nullptr, Vec::Zero(4), 0.5);
    const double s[4][4] = {{0.6, 0, 0, 0.6}, {0, -0.6, 0, 0.6}, {0, 0, 0.7, -0.7}, {-0.5, 0, 0, -0.5}};
    PointMatrix cc(4, 5);
    cc.col(0) = Vec::Zero(4);
    for (int i = 0; i < 4; ++i) cc.col(i + 1) = at_apex.measure.point(at_apex.measure.nearest(Vec::Map(s[i], 4)).first);
    check("cone", at_apex, cc, scales, 3, 0.05);
    return ok;
  });
}

SuiteResult blowup_composition(std::uint64_t seed) {
  return timed("blowup-composition", [&](nlohmann::json& out) {
    const auto mu = surface(synth::PlaneSpec{2, 3, 2.0}, 20000);
    Mat base(3, 3);
    base << 1.2, 0.1, 0.0, 0.1, 0.9, 0.05, 0.0, 0.05, 1.1;
    Mat dir = Mat::Zero(3, 3);
    dir(0, 1) = dir(1, 0) = 1.0;
    const auto field = MetricField::sinusoidal(base, 0.1, dir, 3.0, 0.7);
    std::mt19937_64 rng(seed + 3);
    bool ok = true;
    double point = 0.0, weight = 0.0, f1 = 0.0;
    int audits = 0;
    for (int t = 0; t < 6; ++t) {
      const Vec x = mu.point(static_cast<std::size_t>(unif(rng, 0.0, 1.0) * 19999));
      const double r = unif(rng, 0.2, 0.5), s = unif(rng, 0.3, 0.9);
      for (const MetricField* f : {static_cast<const MetricField*>(nullptr), &field}) {
        const auto a = composition_audit(mu, f, x, r, s);
        point = std::max(point, a.max_point_error);
        weight = std::max(weight, a.max_weight_error);
        f1 = std::max(f1, a.f1);
        ok = ok && a.max_point_error <= 1e-6 && a.max_weight_error <= 1e-6 && a.f1 <= 1e-6;
        ++audits;
      }
    }
    out = {{"audits", audits}, {"max_point_error", point}, {"max_weight_error", weight}, {"max_f1", f1},
           {"tolerance", 1e-6}};
    return ok;
  });
}

std::vector<SuiteResult> run(const std::string& suite, std::uint64_t seed) {
  using Fn = SuiteResult (*)(std::uint64_t);
  static const std::vector<Fn> fns = {eigenvalue_bounds, ellipse_nesting,      flatness_comparison, moment_residuals,
                                      cone_gap,          rescaling_uniformity, blowup_composition};
  const auto& names = suite_names();
  std::vector<SuiteResult> out;
  for (std::size_t k = 0; k < names.size(); ++k)
    if (suite == "all" || suite == names[k]) out.push_back(fns[k](seed));
  if (out.empty()) throw InputError("verify: unknown suite '" + suite + "'");
  return out;
}

}  // namespace gmt::verify
