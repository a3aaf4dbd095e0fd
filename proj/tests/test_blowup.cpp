#include <doctest.h>

#include "gmt/blowup.hpp"
#include "gmt/synth.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace gmt;

namespace {

DiscreteMeasure plane_sample(std::size_t n, double extent) {
  synth::SurfaceSpec spec;
  spec.kind = synth::PlaneSpec{2, 3, extent};
  spec.samples = n;
  return synth::sample(spec);
}

// Translated so that a sample point sits exactly at the origin.
DiscreteMeasure centered_plane(std::size_t n, double extent) {
  const auto mu = plane_sample(n, extent);
  const Vec c = mu.point(mu.nearest(Vec::Zero(3)).first);
  return mu.pushforward_affine(Mat::Identity(3, 3), -c, 1.0);
}

DiscreteMeasure cone_sample(double extent, std::size_t n) {
  synth::SurfaceSpec spec;
  spec.kind = synth::ConeSpec{extent, 0.0};
  spec.samples = n;
  return synth::sample(spec);
}

DiscreteMeasure delta(const Vec& x, double w) {
  PointMatrix p(x.size(), 1);
  p.col(0) = x;
  return DiscreteMeasure(p, Vec::Constant(1, w));
}

DiscreteMeasure random_cloud(std::mt19937_64& rng, int count, int dim) {
  std::uniform_real_distribution<double> u(-1.2, 1.2), w(0.1, 1.0);
  PointMatrix p(dim, count);
  Vec wt(count);
  for (int i = 0; i < count; ++i) {
    for (int k = 0; k < dim; ++k) p(k, i) = u(rng);
    wt(i) = w(rng);
  }
  return DiscreteMeasure(p, wt);
}

Mat rotation4(double a, double b) {
  Mat rot = Mat::Identity(4, 4);
  Mat g1 = Mat::Identity(4, 4), g2 = Mat::Identity(4, 4);
  g1(0, 0) = g1(1, 1) = std::cos(a);
  g1(0, 1) = -std::sin(a);
  g1(1, 0) = std::sin(a);
  g2(1, 1) = g2(2, 2) = std::cos(b);
  g2(1, 2) = -std::sin(b);
  g2(2, 1) = std::sin(b);
  return g1 * g2 * rot;
}

}  // namespace

TEST_CASE("rescale") {
  SUBCASE("plane stays a flat measure through 0") {
    const auto mu = plane_sample(200000, 2.0);
    const Vec x = mu.point(mu.nearest(Vec(Eigen::Vector3d(0.2, -0.1, 0.0))).first);
    for (double r : {0.1, 0.3}) {
      const auto res = rescale(mu, nullptr, x, r);
      CHECK_FALSE(res.anisotropic);
      CHECK(res.measure.ball_mass(Vec::Zero(3), 1.0) == doctest::Approx(1.0).epsilon(1e-9));
      CHECK(res.measure.points().row(2).cwiseAbs().maxCoeff() == 0.0);
      CHECK(res.measure.ball_mass(Vec::Zero(3), 0.5) == doctest::Approx(0.25).epsilon(0.03));
      CHECK(res.normalizer == doctest::Approx(std::numbers::pi * r * r).epsilon(0.03));
    }
  }
  SUBCASE("identity field reproduces the Euclidean map") {
    const auto mu = plane_sample(20000, 2.0);
    const Vec x = mu.point(5);
    const auto a = rescale(mu, nullptr, x, 0.4);
    const auto id = MetricField::identity(3);
    const auto b = rescale(mu, &id, x, 0.4);
    CHECK_FALSE(b.anisotropic);
    CHECK((a.measure.points() - b.measure.points()).norm() == 0.0);
    CHECK((a.measure.weights() - b.measure.weights()).norm() == 0.0);
  }
  SUBCASE("cone at the apex maps onto the cone") {
    const auto mu = cone_sample(1.0, 50000);
    for (double r : {0.3, 0.7}) {
      const auto res = rescale(mu, nullptr, Vec::Zero(4), r);
      const auto& p = res.measure.points();
      double worst = 0.0;
      for (Eigen::Index i = 0; i < p.cols(); ++i)
        worst = std::max(worst, std::abs(p(3, i) * p(3, i) - p.col(i).head(3).squaredNorm()) /
                                    std::max(1.0, p.col(i).squaredNorm()));
      CHECK(worst <= 1e-12);
      CHECK(res.measure.ball_mass(Vec::Zero(4), 1.0) == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
  SUBCASE("anisotropic normalization") {
    const auto mu = plane_sample(50000, 2.0);
    Mat lam(3, 3);
    lam << 1.5, 0.3, 0.0, 0.3, 0.8, 0.0, 0.0, 0.0, 1.0;
    const auto field = MetricField::constant(lam);
    const auto res = rescale(mu, &field, mu.point(0), 0.2);
    CHECK(res.anisotropic);
    CHECK(res.measure.ball_mass(Vec::Zero(3), 1.0) == doctest::Approx(1.0).epsilon(1e-9));
    const Vec back = lam * res.measure.point(10) * 0.2 + mu.point(0);
    CHECK((back - mu.point(10)).norm() <= 1e-12);
  }
  SUBCASE("errors") {
    const auto mu = plane_sample(1000, 1.0);
    CHECK_THROWS_AS(rescale(mu, nullptr, Vec::Constant(3, 5.0), 0.1), DomainError);
    CHECK_THROWS_AS(rescale(mu, nullptr, Vec::Zero(2), 0.1), InputError);
    CHECK_THROWS_AS(rescale(mu, nullptr, Vec::Zero(3), 0.0), InputError);
  }
}

TEST_CASE("composition of rescalings") {
  const auto mu = plane_sample(20000, 2.0);
  Mat base(3, 3);
  base << 1.2, 0.1, 0.0, 0.1, 0.9, 0.05, 0.0, 0.05, 1.1;
  Mat dir = Mat::Zero(3, 3);
  dir(0, 1) = dir(1, 0) = 1.0;
  const auto field = MetricField::sinusoidal(base, 0.1, dir, 3.0, 0.7);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> pick(0.0, 1.0);
  for (int t = 0; t < 6; ++t) {
    const Vec x = mu.point(static_cast<std::size_t>(pick(rng) * 19999));
    const double r = 0.2 + 0.3 * pick(rng), s = 0.3 + 0.6 * pick(rng);
    for (const MetricField* f : {static_cast<const MetricField*>(nullptr), &field}) {
      const auto audit = composition_audit(mu, f, x, r, s);
      CHECK(audit.max_point_error <= 1e-12);
      CHECK(audit.max_weight_error <= 1e-6);
      CHECK(audit.f1 <= 1e-6);
    }
  }
}

TEST_CASE("F_r against hand-solved programs") {
  const Vec o = Vec::Zero(2);
  CHECK(fr_distance(delta(o, 1.0), delta(o, 1.0), 1.0) == 0.0);
  CHECK(fr_distance(delta(o, 1.0), delta(o, 2.0), 1.0) == doctest::Approx(1.0).epsilon(1e-12));
  for (double t : {0.25, 0.5, 2.0}) {
    const Vec x = Vec(Eigen::Vector2d(t * 0.6, t * 0.8));
    const auto res = fr_distance_detailed(delta(o, 1.0), delta(x, 1.0), 1.0);
    CHECK(std::abs(res.value - std::min(t, 1.0)) <= 1e-6);
    CHECK(std::abs(res.duality_gap) <= 1e-9);
    CHECK_FALSE(res.quantized);
  }
  // cap: a unit mass at distance 0.7 from 0 can only be charged r - 0.7
  const Vec y = Vec(Eigen::Vector2d(0.7, 0.0));
  CHECK(fr_distance(delta(y, 1.0), delta(y, 2.0), 1.0) == doctest::Approx(0.3).epsilon(1e-12));
  // mass outside B(0, r) is invisible
  CHECK(fr_distance(delta(Vec(Eigen::Vector2d(1.5, 0.0)), 1.0), delta(Vec(Eigen::Vector2d(0.0, 1.2)), 3.0), 1.0) == 0.0);
}

TEST_CASE("F_r is a pseudometric") {
  std::mt19937_64 rng(7);
  double worst_gap = 0.0;
  for (int t = 0; t < 100; ++t) {
    const auto a = random_cloud(rng, 25, 2), b = random_cloud(rng, 25, 2), c = random_cloud(rng, 25, 2);
    const auto ab = fr_distance_detailed(a, b, 1.0);
    const double ba = fr_distance(b, a, 1.0);
    const double bc = fr_distance(b, c, 1.0), ac = fr_distance(a, c, 1.0);
    CHECK(ab.value == ba);
    CHECK(ac <= ab.value + bc + 1e-8);
    worst_gap = std::max(worst_gap, std::abs(ab.duality_gap));
  }
  CHECK(worst_gap <= 1e-9);
}

TEST_CASE("F_r quantization above the cap") {
  std::mt19937_64 rng(3);
  const auto a = random_cloud(rng, 600, 3), b = random_cloud(rng, 600, 3);
  const auto exact = fr_distance_detailed(a, b, 1.5);
  const auto coarse = fr_distance_detailed(a, b, 1.5, FrOptions{150});
  CHECK_FALSE(exact.quantized);
  CHECK(exact.quantization_error == 0.0);
  CHECK(coarse.quantized);
  CHECK(coarse.sources <= 150);
  CHECK(std::abs(coarse.value - exact.value) <= coarse.quantization_error + 1e-9);
  CHECK(coarse.to_json()["quantized"].get<bool>());
  CHECK_THROWS_AS(fr_distance(a, b, 1.0, FrOptions{0}), InputError);
  CHECK_THROWS_AS(fr_distance(a, delta(Vec::Zero(2), 1.0), 1.0), InputError);
}

TEST_CASE("F distance") {
  std::mt19937_64 rng(5);
  const auto a = random_cloud(rng, 40, 2);
  CHECK(f_distance(a, a, 5).value == 0.0);

  const auto b = random_cloud(rng, 40, 2);
  double prev = 0.0;
  for (int k = 1; k <= 6; ++k) {
    const auto fd = f_distance(a, b, k);
    CHECK(fd.value >= prev);
    CHECK(fd.terms.size() == static_cast<std::size_t>(k));
    CHECK(std::isinf(fd.truncation_bound));  // unequal total masses
    prev = fd.value;
  }

  const auto p = plane_sample(700, 2.0);
  const auto q = p.pushforward_affine(Mat::Identity(3, 3), 0.1 * Vec::Unit(3, 2), 1.0);
  const auto coarse = f_distance(p, q, 6), fine = f_distance(p, q, 10);
  CHECK(coarse.value > 0.0);
  CHECK(std::abs(coarse.value - fine.value) <= 0.1 * fine.value);
  CHECK(fine.truncation_bound < coarse.truncation_bound);
  CHECK(fine.value - coarse.value <= coarse.truncation_bound + 1e-12);
  CHECK_THROWS_AS(f_distance(p, q, 0), InputError);
}

TEST_CASE("flatness functional") {
  SUBCASE("plane through 0") {
    const auto res = flatness_functional(rescale(centered_plane(100000, 2.0), nullptr, Vec::Zero(3), 0.5).measure, 2);
    CHECK(res.value <= 1e-8);
    CHECK(res.plane.dim() == 2);
    CHECK(res.unit_mass == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(res.plane.distance(Vec::Unit(3, 0)) <= 1e-12);
  }
  SUBCASE("cone at the apex matches the frozen quadrature value") {
    const auto mu = cone_sample(1.5, 1000000);
    const auto res = flatness_functional(rescale(mu, nullptr, Vec::Zero(4), 1.0).measure, 3);
    CHECK(res.value == doctest::Approx(kConeFlatnessBaseline).epsilon(2e-3));

    const Mat rot = rotation4(0.7, -0.4);
    const auto turned = mu.pushforward_affine(rot, Vec::Zero(4), 1.0);
    const auto res2 = flatness_functional(rescale(turned, nullptr, Vec::Zero(4), 1.0).measure, 3);
    CHECK(std::abs(res2.value - res.value) <= 1e-9);
  }
  SUBCASE("preconditions") {
    const auto mu = plane_sample(1000, 2.0);
    CHECK_THROWS_AS(flatness_functional(mu.pushforward_affine(Mat::Identity(3, 3), Vec::Unit(3, 2), 1.0), 2),
                    PreconditionError);
    CHECK_THROWS_AS(flatness_functional(mu, 4), InputError);
  }
}

TEST_CASE("tangent flatness trajectories") {
  const auto plane = centered_plane(100000, 3.0);
  for (const auto& p : tangent_flatness_trajectory(plane, 2, {0.25, 0.5, 1.0})) CHECK(p.value <= 1e-8);

  const auto cone = cone_sample(12.0, 400000);
  for (const auto& p : tangent_flatness_trajectory(cone, 3, {1.0, 2.0, 4.0, 8.0}))
    CHECK(p.value >= 0.5 * kConeFlatnessBaseline);

  synth::SurfaceSpec ss;
  ss.kind = synth::SphereSpec{1.0, 3, std::numbers::pi, true};
  ss.samples = 3 * 70000 + 1;
  const auto sphere = synth::sample(ss).pushforward_affine(Mat::Identity(3, 3), -Vec::Unit(3, 2), 1.0);
  const auto traj = tangent_flatness_trajectory(sphere, 2, {0.5, 0.25, 0.125, 0.0625});
  for (std::size_t k = 1; k < traj.size(); ++k) CHECK(traj[k].value < traj[k - 1].value);
  CHECK(traj.back().value <= 0.01);
  CHECK_THROWS_AS(tangent_flatness_trajectory(sphere, 2, {}), InputError);
}

TEST_CASE("uniformity defect") {
  const auto plane = plane_sample(200000, 2.0);
  PointMatrix pc(3, 9);
  int k = 0;
  for (int i = -1; i <= 1; ++i)
    for (int j = -1; j <= 1; ++j) pc.col(k++) = plane.point(plane.nearest(Vec(Eigen::Vector3d(0.3 * i, 0.3 * j, 0.0))).first);
  const auto up = uniformity_defect(plane, pc, {0.05, 0.1, 0.2, 0.4}, 2);
  CHECK(up.sup_defect <= 0.03);
  CHECK(up.c_fit == doctest::Approx(std::numbers::pi).epsilon(0.03));

  // apex plus two points on each nappe
  const auto cone = cone_sample(0.75, 1000000);
  const double s[4][4] = {{0.3, 0, 0, 0.3}, {0, -0.3, 0, 0.3}, {0, 0, 0.35, -0.35}, {-0.25, 0, 0, -0.25}};
  PointMatrix cc(4, 5);
  cc.col(0) = Vec::Zero(4);
  for (int i = 0; i < 4; ++i) cc.col(i + 1) = cone.point(cone.nearest(Vec::Map(s[i], 4)).first);
  const auto uc = uniformity_defect(cone, cc, {0.05, 0.1, 0.2}, 3);
  CHECK(uc.sup_defect <= 0.05);
  CHECK(uc.c_fit == doctest::Approx(4.0 * std::numbers::pi / 3.0).epsilon(0.05));

  // Caps grow like pi r^2 only up to the diameter, where the sphere runs out.
  synth::SurfaceSpec ss;
  ss.kind = synth::SphereSpec{1.0, 3};
  ss.samples = 100000;
  const auto sphere = synth::sample(ss);
  PointMatrix sc(3, 1);
  sc.col(0) = sphere.point(0);
  CHECK(uniformity_defect(sphere, sc, {0.25, 0.5, 1.0, 2.0, 3.0}, 2).sup_defect > 0.05);

  CHECK_THROWS_AS(uniformity_defect(sphere, sc, {}, 2), InputError);
  PointMatrix far(3, 1);
  far.col(0) = Vec::Constant(3, 9.0);
  CHECK_THROWS_AS(uniformity_defect(sphere, far, {0.1}, 2), DomainError);
}

TEST_CASE("conicality defect") {
  const auto plane = centered_plane(200000, 3.0);
  const auto dp = conicality_defect(plane, 2, {0.5, 0.25});
  CHECK(dp.value <= 0.02);
  CHECK(dp.per_scale.size() == 2);

  const auto cone = cone_sample(0.75, 1000000);
  CHECK(conicality_defect(cone, 3, {0.5, 0.25}).value <= 0.03);

  const auto offset = plane_sample(200000, 3.0).pushforward_affine(Mat::Identity(3, 3), 0.2 * Vec::Unit(3, 2), 1.0);
  CHECK(conicality_defect(offset, 2, {0.5, 0.8}).value > 0.1);
  CHECK_THROWS_AS(conicality_defect(offset, 2, {0.1}), DomainError);
}
