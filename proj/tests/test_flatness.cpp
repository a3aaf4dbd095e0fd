#include <doctest.h>

#include "gmt/flatness.hpp"
#include "gmt/synth.hpp"

#include <cmath>
#include <random>

using namespace gmt;

namespace {

const double kInvSqrt2 = 1.0 / std::sqrt(2.0);

DiscreteMeasure plane_sample(std::size_t n = 200000, double extent = 2.0) {
  synth::SurfaceSpec spec;
  spec.kind = synth::PlaneSpec{2, 3, extent};
  spec.samples = n;
  return synth::sample(spec);
}

DiscreteMeasure sphere_sample(std::size_t n = 200000, double cap = std::numbers::pi) {
  synth::SurfaceSpec spec;
  spec.kind = synth::SphereSpec{1.0, 3, cap};
  spec.samples = n;
  return synth::sample(spec);
}

DiscreteMeasure cone_sample(std::size_t n = 500000) {
  synth::SurfaceSpec spec;
  spec.kind = synth::ConeSpec{1.0, 0.0};
  spec.samples = n;
  return synth::sample(spec);
}

Vec near(const DiscreteMeasure& mu, std::initializer_list<double> target) {
  Vec x(static_cast<Eigen::Index>(target.size()));
  Eigen::Index i = 0;
  for (double t : target) x(i++) = t;
  return mu.point(mu.nearest(x).first);
}

Mat rotation3(double a, double b, double c) {
  return (Eigen::AngleAxisd(a, Eigen::Vector3d::UnitZ()) * Eigen::AngleAxisd(b, Eigen::Vector3d::UnitY()) *
          Eigen::AngleAxisd(c, Eigen::Vector3d::UnitX()))
      .toRotationMatrix();
}

}  // namespace

TEST_CASE("hausdorff distance") {
  PointMatrix a = PointMatrix::Zero(2, 1), b(2, 1);
  b << 3.0, 4.0;
  CHECK(hausdorff_distance(a, b) == doctest::Approx(5.0));
  CHECK(hausdorff_distance(b, b) == 0.0);
  PointMatrix two(2, 2), one(2, 1);
  two << 0.0, 1.0, 0.0, 0.0;
  one << 0.0, 1.0;
  CHECK(hausdorff_distance(two, one) == doctest::Approx(std::sqrt(2.0)));
  CHECK(hausdorff_distance(one, two) == doctest::Approx(std::sqrt(2.0)));
  CHECK_THROWS_AS(hausdorff_distance(PointMatrix(2, 0), one), DomainError);
}

TEST_CASE("kernel profile") {
  const KernelSpec k{1.0, 2.0};
  CHECK(k(0.0) == 1.0);
  CHECK(k(1.0) == 1.0);
  CHECK(k(2.0) == 0.0);
  CHECK(k(5.0) == 0.0);
  CHECK(k(1.5) == doctest::Approx(0.5).epsilon(1e-12));
  double prev = 1.0;
  for (double t = 0.0; t < 2.5; t += 0.01) {
    const double v = k(t);
    CHECK(v <= prev);
    CHECK(v >= 0.0);
    prev = v;
  }
  CHECK_THROWS_AS((KernelSpec{2.0, 1.0}.validate()), InputError);
}

TEST_CASE("plane type") {
  Vec base = Vec::Zero(3);
  Mat dirs(3, 2);
  dirs << 1, 1, 0, 1, 0, 0;
  const Plane p = Plane::through(base, dirs);
  CHECK((p.basis * p.basis.transpose() - Mat::Identity(2, 2)).norm() < 1e-10);
  CHECK((p.basis * p.normal).norm() < 1e-10);
  CHECK(std::abs(std::abs(p.normal(2)) - 1.0) < 1e-12);
  Vec q(3);
  q << 0.3, -0.2, 0.7;
  CHECK(p.distance(q) == doctest::Approx(0.7));
  dirs.col(1) = dirs.col(0);
  CHECK_THROWS_AS(Plane::through(base, dirs), DegenerateError);
}

TEST_CASE("weighted plane fitting") {
  SUBCASE("exact tilted plane") {
    synth::SurfaceSpec inner;
    inner.kind = synth::PlaneSpec{2, 3, 2.0};
    inner.samples = 40000;
    synth::AffineImageSpec img;
    img.inner = std::make_shared<const synth::SurfaceSpec>(inner);
    img.matrix = rotation3(0.3, 0.4, -0.2);
    img.shift = Vec::Zero(3);
    synth::SurfaceSpec spec;
    spec.kind = img;
    spec.samples = 40000;
    const auto mu = synth::sample(spec);
    const Vec truth = img.matrix.col(2);
    const Vec x = mu.point(mu.nearest(Vec::Zero(3)).first);
    for (bool through : {false, true}) {
      const Plane p = fit_plane_weighted(mu, x, 0.1, KernelSpec{}, through, 2);
      CHECK(std::acos(std::min(1.0, std::abs(p.normal.dot(truth)))) < 1e-6);
    }
  }
  SUBCASE("sphere tangent plane") {
    const auto mu = sphere_sample();
    for (std::size_t i : {11u, 5000u, 123456u}) {
      const Vec x = mu.point(i);
      const Plane p = fit_plane_weighted(mu, x, 0.1 / 3.0, KernelSpec{}, true, 2);
      CHECK(std::acos(std::min(1.0, std::abs(p.normal.dot(x.normalized())))) < 0.02);
    }
  }
  SUBCASE("two parallel planes, centred between them") {
    const auto sheet = plane_sample(40000, 2.0);
    PointMatrix pts(3, static_cast<Eigen::Index>(2 * sheet.size()));
    pts << sheet.points(), sheet.points();
    pts.row(2).head(static_cast<Eigen::Index>(sheet.size())).setConstant(0.1);
    pts.row(2).tail(static_cast<Eigen::Index>(sheet.size())).setConstant(-0.1);
    Vec w(pts.cols());
    w << sheet.weights(), sheet.weights();
    const DiscreteMeasure mu(pts, w);
    const Plane p = fit_plane_weighted(mu, Vec::Zero(3), 0.2, KernelSpec{}, true, 2);
    CHECK(std::abs(std::abs(p.normal(2)) - 1.0) < 1e-9);
  }
  SUBCASE("too few points") {
    const auto mu = plane_sample(400, 2.0);
    CHECK_THROWS_AS(fit_plane_weighted(mu, mu.point(200), 0.01, KernelSpec{1.0, 1.5}, true, 2), DegenerateError);
  }
}

TEST_CASE("centered beta") {
  SUBCASE("plane") {
    const auto mu = plane_sample();
    CHECK(beta_centered(mu, near(mu, {0.1, 0.2, 0.0}), 0.2, 2).value <= 1e-6);
  }
  SUBCASE("sphere second-order oracle") {
    const auto mu = sphere_sample();
    for (std::size_t i : {7u, 77777u}) CHECK(std::abs(beta_centered(mu, mu.point(i), 0.1, 2).value - 0.05) <= 0.01);
  }
  SUBCASE("cone apex") {
    const auto mu = cone_sample();
    for (double r : {0.5, 1.0}) CHECK(beta_centered(mu, Vec::Zero(4), r, 3).value >= kInvSqrt2 - 0.02);
  }
  SUBCASE("empty ball and bad input") {
    const auto mu = plane_sample(10000);
    CHECK_THROWS_AS(beta_centered(mu, mu.point(0), -1.0, 2), InputError);
    Vec off = mu.point(0);
    off(2) = 1.0;
    CHECK_THROWS_AS(beta_centered(mu, off, 0.1, 2), DomainError);
  }
}

TEST_CASE("bilateral beta") {
  SUBCASE("plane") {
    const auto mu = plane_sample();
    const auto b = bbeta(mu, near(mu, {0.0, 0.1, 0.0}), 0.5, 2);
    CHECK(b.value <= 0.01);
    CHECK(b.grid_spacing > 0.0);
  }
  SUBCASE("half-plane edge") {
    const auto full = plane_sample(200000);
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < full.size(); ++i)
      if (full.points()(0, static_cast<Eigen::Index>(i)) > 0.0) keep.push_back(i);
    const auto half = full.subset(keep);
    const Vec x = near(half, {0.0, 0.0, 0.0});
    CHECK(bbeta(half, x, 0.3, 2).value >= 0.4);
    // one-sided beta does not see the hole
    CHECK(beta_centered(half, x, 0.3, 2).value <= 1e-6);
  }
  SUBCASE("cone apex") {
    const auto mu = cone_sample();
    const auto b = bbeta(mu, Vec::Zero(4), 1.0, 3);
    CHECK(b.value >= kInvSqrt2 - 0.02);
    CHECK(b.value <= kInvSqrt2 + 0.02);
    const Plane witness = Plane::with_normal(Vec::Zero(4), Vec::Unit(4, 3));
    CHECK(bilateral_distance(mu, Vec::Zero(4), 1.0, witness) <= kInvSqrt2 + 0.02);
  }
  SUBCASE("beta never exceeds the bilateral value") {
    const auto mu = sphere_sample(50000);
    for (std::size_t i : {3u, 999u, 31337u})
      for (double r : {0.1, 0.3}) CHECK(beta_centered(mu, mu.point(i), r, 2).value <= bbeta(mu, mu.point(i), r, 2).value + 1e-9);
  }
}

TEST_CASE("smooth beta2") {
  SUBCASE("plane") {
    const auto mu = plane_sample();
    CHECK(beta2_smooth(mu, near(mu, {0.2, -0.1, 0.0}), 0.1, 2) <= 1e-6);
  }
  SUBCASE("nested balls on the sphere") {
    const auto mu = sphere_sample();
    std::mt19937_64 rng(11);
    double worst = 0.0;
    for (int q = 0; q < 40; ++q) {
      const std::size_t i = rng() % mu.size();
      const Vec x = mu.point(i);
      const double r = 0.05 + 0.1 * static_cast<double>(rng() % 1000) / 1000.0;
      const double rp = r * (0.5 + 0.5 * static_cast<double>(rng() % 1000) / 1000.0);
      // B(x', r') inside B(x, r): pick x' on the support within r - r' of x.
      const auto cand = mu.support_in(x, std::max(r - rp, 1e-9));
      const Vec xp = mu.point(cand[rng() % cand.size()]);
      worst = std::max(worst, beta2_smooth(mu, xp, rp, 2) / beta2_smooth(mu, x, r, 2));
    }
    CHECK(worst <= 32.0);
  }
  SUBCASE("dominated by bilateral beta at triple scale") {
    // Support points in B(X, 3r) lie within 3r bbeta of the bbeta plane, and
    // the kernel mass is at most Theta omega_n (3r)^n, so beta2 <= C bbeta with
    // C = 3 sqrt(Theta omega_n 3^n); Theta = 1.05 covers quadrature noise.
    const auto sphere = sphere_sample(100000);
    const auto cone = cone_sample(200000);
    std::mt19937_64 rng(12);
    PlaneSearchOptions fast;
    fast.restarts = 1;
    double worst2 = 0.0, worst3 = 0.0;
    for (int q = 0; q < 25; ++q) {
      const Vec x = sphere.point(rng() % sphere.size());
      const double r = 0.03 + 0.05 * static_cast<double>(rng() % 1000) / 1000.0;
      worst2 = std::max(worst2, beta2_smooth(sphere, x, r, 2) / bbeta(sphere, x, 3 * r, 2, nullptr, fast).value);
    }
    for (int q = 0; q < 25; ++q) {
      const Vec x = cone.point(rng() % (cone.size() / 4));
      const double r = 0.05 + 0.05 * static_cast<double>(rng() % 1000) / 1000.0;
      worst3 = std::max(worst3, beta2_smooth(cone, x, r, 3) / bbeta(cone, x, 3 * r, 3, nullptr, fast).value);
    }
    CHECK(std::isfinite(worst2));
    CHECK(worst2 <= 3.0 * std::sqrt(1.05 * unit_ball_volume(2) * 9.0));
    CHECK(std::isfinite(worst3));
    CHECK(worst3 <= 3.0 * std::sqrt(1.05 * unit_ball_volume(3) * 27.0));
  }
}

TEST_CASE("Euclidean and anisotropic flatness comparison") {
  SUBCASE("identity field") {
    const auto mu = plane_sample(100000);
    const auto field = MetricField::identity(3);
    const auto bounds = CompactBounds::from_extremes(1.0, 1.0, 0.0);
    const Vec x = near(mu, {0.1, 0.1, 0.0});
    const Plane p = Plane::with_normal(x, Vec::Unit(3, 2));
    for (double delta : {0.01, 0.2, 0.9}) {
      const auto rec = flatness_comparison_check(field, mu, x, 0.2, p, delta, bounds);
      CHECK(rec.pass());
      CHECK(rec.r_euclidean_inner == rec.r_euclidean_outer);
    }
    CHECK_THROWS_AS(flatness_comparison_check(field, mu, x, 0.2, p, 1.0, bounds), HypothesisError);
  }
  SUBCASE("tilted lines under diag(2, 1)") {
    const Mat lam = Vec(Eigen::Vector2d(2.0, 1.0)).asDiagonal();
    const auto field = MetricField::constant(lam);
    const auto bounds = CompactBounds::from_extremes(1.0, 2.0, 0.0);
    std::mt19937_64 rng(21);
    auto unif = [&](double a, double b) { return a + (b - a) * static_cast<double>(rng() >> 11) * 0x1.0p-53; };
    int met = 0;
    for (int q = 0; q < 100; ++q) {
      const double tilt = unif(-0.3, 0.3);
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
      const Vec x = mu.point(mu.nearest(Vec::Constant(2, unif(-0.3, 0.3))).first);
      const double r = unif(0.05, 0.3);
      // A plane through X a little off the data direction.
      const double off = unif(-0.1, 0.1);
      const Vec dir(Eigen::Vector2d(std::cos(tilt + off), std::sin(tilt + off)));
      const Plane p = Plane::through(x, dir);
      const double delta = unif(0.01, 0.49);
      const auto rec = flatness_comparison_check(field, mu, x, r, p, delta, bounds);
      CHECK(rec.pass());
      met += rec.any_hypothesis_met();
    }
    CHECK(met > 20);
  }
  SUBCASE("cone apex never meets the hypothesis") {
    const auto mu = cone_sample(200000);
    const auto field = MetricField::identity(4);
    const auto bounds = CompactBounds::from_extremes(1.0, 1.0, 0.0);
    const Plane p = Plane::with_normal(Vec::Zero(4), Vec::Unit(4, 3));
    const auto rec = flatness_comparison_check(field, mu, Vec::Zero(4), 0.5, p, 0.5, bounds);
    CHECK_FALSE(rec.any_hypothesis_met());
    CHECK(rec.pass());
  }
}

TEST_CASE("decay fits") {
  std::vector<double> r, b;
  for (int k = 3; k <= 7; ++k) {
    r.push_back(std::ldexp(1.0, -k));
    b.push_back(0.5 * std::pow(r.back(), 0.3));
  }
  const auto fit = decay_fit(r, b);
  CHECK(fit.gamma == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(fit.C == doctest::Approx(0.5).epsilon(1e-12));
  CHECK_THROWS_AS(decay_fit({0.1, 0.05}, {0.1, 0.05}), DegenerateError);
  CHECK_THROWS_AS(decay_fit({0.1, 0.05, 0.02}, {0.1, 0.0, 0.0}), DegenerateError);

  SUBCASE("sphere decays linearly") {
    const auto mu = sphere_sample(500000, 0.2);
    const Vec x = near(mu, {0.0, 0.0, 1.0});
    std::vector<double> beta;
    for (double s : r) beta.push_back(beta_centered(mu, x, s, 2).value);
    const auto g = decay_fit(r, beta);
    CHECK(g.gamma >= 0.9);
    CHECK(g.gamma <= 1.1);
  }
}

TEST_CASE("flatness profile and serialization") {
  const auto mu = sphere_sample(100000);
  const Mat lam = Vec(Eigen::Vector3d(1.5, 1.0, 1.0)).asDiagonal();
  const auto field = MetricField::constant(lam);
  PlaneSearchOptions fast;
  fast.restarts = 1;
  const auto prof = flatness_profile(mu, mu.point(500), {0.4, 0.2, 0.1}, 2, &field, fast);
  REQUIRE(prof.bbeta_aniso.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(prof.beta[i] >= 0.0);
    CHECK(prof.beta[i] <= prof.bbeta[i] + 1e-9);
    CHECK(prof.beta2[i] >= 0.0);
  }
  CHECK(std::isfinite(prof.gamma_fit));
  const auto j = prof.to_json();
  CHECK(j["scales"].size() == 3);
  const std::string csv = prof.to_csv();
  CHECK(csv.rfind("scale,beta,bbeta,bbeta_aniso,beta2\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
}

TEST_CASE("coefficients vanish on exact plane samples") {
  const auto mu = plane_sample(200000);
  for (const Vec& x : {near(mu, {0.0, 0.0, 0.0}), near(mu, {-0.3, 0.4, 0.0})})
    for (double r : {0.1, 0.4}) {
      CHECK(beta_centered(mu, x, r, 2).value <= 1e-9);
      // lattice spacing h = 2 / 447; each plane point is within h / sqrt(2) of a sample
      const auto b = bbeta(mu, x, r, 2);
      CHECK(b.value <= (2.0 / 447.0) / std::sqrt(2.0) / r + b.grid_spacing);
      CHECK(beta2_smooth(mu, x, r / 3.0, 2) <= 1e-9);
    }
}

TEST_CASE("rigid motions and dilations leave coefficients unchanged") {
  // A tilted, anisotropic paraboloid so that the principal frame is unique.
  synth::SurfaceSpec inner;
  inner.kind = synth::HolderGraphSpec{0.5, 0.3, 1.0, 3, 5};
  inner.samples = 40000;
  const auto mu = synth::sample(inner);
  const Vec x = near(mu, {0.05, -0.1, 0.0});
  const std::size_t ix = mu.nearest(x).first;
  const Mat rot = rotation3(0.7, -0.4, 1.1);
  Vec shift(3);
  shift << 0.5, -2.0, 3.0;
  const auto moved = mu.pushforward_affine(rot, shift, 1.0);
  const double s = 2.5;
  const auto dilated = mu.pushforward_affine(s * Mat::Identity(3, 3), Vec::Zero(3), 1.0);
  const Vec xm = moved.point(ix), xd = dilated.point(ix);
  for (double r : {0.1, 0.25}) {
    const double b0 = beta_centered(mu, x, r, 2).value;
    CHECK(beta_centered(moved, xm, r, 2).value == doctest::Approx(b0).epsilon(1e-9));
    CHECK(beta_centered(dilated, xd, s * r, 2).value == doctest::Approx(b0).epsilon(1e-9));
    const double bb0 = bbeta(mu, x, r, 2).value;
    CHECK(bbeta(moved, xm, r, 2).value == doctest::Approx(bb0).epsilon(1e-9));
    CHECK(bbeta(dilated, xd, s * r, 2).value == doctest::Approx(bb0).epsilon(1e-9));
    const double q0 = beta2_smooth(mu, x, r / 3.0, 2);
    CHECK(beta2_smooth(moved, xm, r / 3.0, 2) == doctest::Approx(q0).epsilon(1e-9));
    // beta2 carries the mass normalization r^{-(n+2)}; dilation scales the
    // mass by 1 here, so compensate with s^{n}.
    CHECK(beta2_smooth(dilated, xd, s * r / 3.0, 2) * s == doctest::Approx(q0).epsilon(1e-9));
  }
  const Mat lam = Vec(Eigen::Vector3d(1.4, 1.0, 0.8)).asDiagonal();
  const auto field = MetricField::constant(lam);
  const auto moved_field = field.rigid_transformed(rot, shift);
  const double a0 = bbeta(mu, x, 0.2, 2, &field).value;
  CHECK(bbeta(moved, xm, 0.2, 2, &moved_field).value == doctest::Approx(a0).epsilon(1e-9));
}
