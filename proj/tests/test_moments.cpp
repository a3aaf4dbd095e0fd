#include <doctest.h>

#include "gmt/moments.hpp"
#include "gmt/synth.hpp"

#include <cmath>

using namespace gmt;

namespace {

DiscreteMeasure plane_sample(std::size_t n, double extent, int dim = 2, int ambient = 3) {
  synth::SurfaceSpec spec;
  spec.kind = synth::PlaneSpec{dim, ambient, extent};
  spec.samples = n;
  return synth::sample(spec);
}

// Polar rings on the cap cos(theta) >= 0.9 (chord^2 up to 0.2). With a ring
// count divisible by 20 the radii 0.1, 0.2, 0.4 fall on ring boundaries.
DiscreteMeasure sphere_rings(std::size_t rings = 40000) {
  synth::SurfaceSpec spec;
  spec.kind = synth::SphereSpec{1.0, 3, std::acos(0.9), true};
  spec.samples = 3 * rings + 1;
  return synth::sample(spec);
}

Vec pole() { return Vec::Unit(3, 2); }

}  // namespace

TEST_CASE("tilde transform") {
  SUBCASE("identity field leaves the measure alone") {
    const auto mu = plane_sample(10000, 1.0);
    const auto frame = tilde_transform(mu, MetricField::identity(3), mu.point(17));
    CHECK((frame.y0 - frame.x0).norm() == 0.0);
    CHECK((frame.tilde_measure.points() - mu.points()).norm() == 0.0);
    CHECK((frame.tilde_measure.weights() - mu.weights()).norm() == 0.0);
  }
  SUBCASE("diag(2, 1) maps the x-axis to itself") {
    const auto mu = plane_sample(1000, 2.0, 1, 2);
    const Mat lam = Vec(Eigen::Vector2d(2.0, 1.0)).asDiagonal();
    const auto frame = tilde_transform(mu, MetricField::constant(lam), mu.point(500));
    CHECK(frame.tilde_measure.points().row(1).cwiseAbs().maxCoeff() == 0.0);
    CHECK(frame.tilde_measure.points().row(0).isApprox(0.5 * mu.points().row(0)));
    CHECK(frame.tilde_measure.total_mass() == doctest::Approx(mu.total_mass()).epsilon(1e-14));
  }
  SUBCASE("round trip and identity at Y0") {
    const auto mu = sphere_rings(2000);
    Mat base(3, 3);
    base << 1.5, 0.2, 0.0, 0.2, 1.0, 0.1, 0.0, 0.1, 0.8;
    Mat dir = Mat::Zero(3, 3);
    dir(0, 0) = 1.0;
    const auto field = MetricField::sinusoidal(base, 0.3, dir, 4.0, 0.9);
    for (std::size_t i : {0u, 77u, 4321u}) {
      const auto frame = tilde_transform(mu, field, mu.point(i));
      CHECK((frame.backward * frame.tilde_measure.points() - mu.points()).cwiseAbs().maxCoeff() <= 1e-12);
      CHECK((frame.tilde_field(frame.y0) - Mat::Identity(3, 3)).norm() <= 1e-10);
      CHECK((frame.y0 - frame.forward * mu.point(i)).norm() <= 1e-14);
    }
  }
  SUBCASE("off the support") {
    const auto mu = plane_sample(1000, 1.0);
    CHECK_THROWS_AS(tilde_transform(mu, MetricField::identity(3), Vec::Constant(3, 0.3)), DomainError);
    CHECK_THROWS_AS(tilde_transform(mu, MetricField::identity(2), mu.point(0)), InputError);
  }
}

TEST_CASE("plane moments against the ball-integral oracle") {
  // int_{B^n(r)} z_1^2 = omega_n r^{n+2} / (n+2), so Q is the in-plane
  // projection and tr Q = n; odd symmetry gives b = 0.
  const auto mu = plane_sample(1000000, 1.0);
  const auto frame = tilde_transform(mu, MetricField::identity(3), mu.point(mu.nearest(Vec::Zero(3)).first));
  for (double r : {0.05, 0.1, 0.2}) {
    const auto m = moments(frame, r, 2);
    CHECK(m.b.norm() <= 0.01 * r);
    CHECK(std::abs(m.trQ - 2.0) <= 0.05);
    CHECK((m.Q * Vec::Unit(3, 0) - Vec::Unit(3, 0)).norm() <= 0.05);
    CHECK((m.Q * Vec::Unit(3, 1) - Vec::Unit(3, 1)).norm() <= 0.05);
    CHECK((m.Q * Vec::Unit(3, 2)).norm() <= 0.05);
    CHECK(m.trQ == doctest::Approx(m.Q.trace()).epsilon(1e-12));
    CHECK(Eigen::SelfAdjointEigenSolver<Mat>(m.Q).eigenvalues().minCoeff() >= -1e-10);
    CHECK((m.Q - m.Q.transpose()).norm() == 0.0);

    const auto table = moment_residuals(frame, r, 2, admissible_test_points(frame, r, 200));
    CHECK(table.rows.size() == 200);
    for (const auto& row : table.rows) CHECK(row.lhs <= 0.01 * r * r);
  }
}

TEST_CASE("plane residual identity holds pointwise") {
  // On exact plane data 2<b, v> + Q(v) - |v|^2 = -|v_perp|^2, so zero on the plane.
  const auto mu = plane_sample(250000, 1.0);
  const auto frame = tilde_transform(mu, MetricField::identity(3), mu.point(mu.nearest(Vec::Zero(3)).first));
  const auto m = moments(frame, 0.2, 2);
  const Mat proj = Vec(Eigen::Vector3d(1.0, 1.0, 0.0)).asDiagonal();
  Vec v(3);
  v << 0.03, -0.02, 0.05;
  const double lhs = 2.0 * m.b.dot(v) + m.quadratic(v) - v.squaredNorm();
  CHECK(lhs == doctest::Approx(-0.05 * 0.05).epsilon(0.02));
  CHECK((m.Q - proj).norm() <= 0.01);
}

TEST_CASE("sphere moments match the exact cap integrals") {
  // Around the pole of the unit sphere the area inside chord s is pi s^2, so
  // b = -(r^2/6) e3, Q = diag(1 - r^2/6, 1 - r^2/6, r^2/3), tr Q = 2 and
  // the residual at a point of chord s is s^4 (1/4 - r^2/8).
  const auto mu = sphere_rings();
  const auto frame = tilde_transform(mu, MetricField::identity(3), pole());
  std::vector<double> coefficient;
  for (double r : {0.1, 0.2, 0.4}) {
    const auto m = moments(frame, r, 2);
    CHECK(m.b(2) == doctest::Approx(-r * r / 6.0).epsilon(1e-6));
    CHECK(m.b.head(2).norm() <= 1e-12);
    CHECK(m.Q(0, 0) == doctest::Approx(1.0 - r * r / 6.0).epsilon(1e-6));
    CHECK(m.Q(1, 1) == doctest::Approx(1.0 - r * r / 6.0).epsilon(1e-6));
    CHECK(m.Q(2, 2) == doctest::Approx(r * r / 3.0).epsilon(1e-6));
    CHECK(m.trQ == doctest::Approx(2.0).epsilon(1e-6));

    const auto table = moment_residuals(frame, r, 2, admissible_test_points(frame, r, 128));
    for (const auto& row : table.rows) {
      const double s = (row.y - frame.y0).norm();
      CHECK(row.lhs == doctest::Approx(std::pow(s, 4) * (0.25 - r * r / 8.0)).epsilon(1e-4).scale(1e-12));
    }
    CHECK(std::isfinite(table.fitted_constant));
    CHECK(table.residual_exponent == doctest::Approx(4.0).epsilon(0.01));
    coefficient.push_back(table.residual_coefficient);
  }
  const auto [lo, hi] = std::minmax_element(coefficient.begin(), coefficient.end());
  CHECK(*hi <= 1.2 * *lo);
}

TEST_CASE("trace defect recovers a planted density exponent") {
  // weight factor 1 + a|z|^alpha gives tr Q - n = a n (n+2) / (n+2+alpha) r^alpha.
  const double a = 0.3, alpha = 0.5;
  const auto flat = plane_sample(1000000, 1.0);
  const Vec c = flat.point(flat.nearest(Vec::Zero(3)).first);
  synth::SurfaceSpec spec;
  spec.kind = synth::PlaneSpec{2, 3, 1.0};
  spec.samples = 1000000;
  spec.density = synth::RadialPowerDensity{c, a, alpha};
  const auto mu = synth::sample(spec);
  const auto frame = tilde_transform(mu, MetricField::identity(3), c);
  std::vector<double> rs = scale_ladder(0.02, 0.3, 2), defect;
  for (double r : rs) {
    const auto m = moments(frame, r, 2);
    defect.push_back(std::abs(m.trQ - 2.0));
    CHECK(m.trQ - 2.0 == doctest::Approx(a * 2.0 * 4.0 / 4.5 * std::pow(r, alpha)).epsilon(0.05));
  }
  const auto fit = fit_power_law(rs, defect);
  CHECK(std::abs(fit.exponent - alpha) <= 0.15);
  const auto table = moment_residuals(frame, 0.1, 2, admissible_test_points(frame, 0.1, 16), {alpha, 1.0});
  CHECK(table.trace_ratio == doctest::Approx(a * 8.0 / 4.5).epsilon(0.05));
}

TEST_CASE("moments are equivariant under rotations about Y0") {
  const auto mu = sphere_rings(20000);
  const auto frame = tilde_transform(mu, MetricField::identity(3), pole());
  const Mat rot =
      (Eigen::AngleAxisd(0.4, Eigen::Vector3d::UnitX()) * Eigen::AngleAxisd(-1.1, Eigen::Vector3d::UnitZ())).toRotationMatrix();
  const Vec y0 = frame.y0;
  const auto turned = mu.pushforward_affine(rot, y0 - rot * y0, 1.0);
  const auto frame2 = tilde_transform(turned, MetricField::identity(3), y0);
  for (double r : {0.15, 0.3}) {
    const auto m = moments(frame, r, 2);
    const auto m2 = moments(frame2, r, 2);
    REQUIRE(m.points == m2.points);
    CHECK((m2.b - rot * m.b).norm() <= 1e-9);
    CHECK((m2.Q - rot * m.Q * rot.transpose()).norm() <= 1e-9);
  }
}

TEST_CASE("residual errors and serialization") {
  const auto mu = plane_sample(40000, 1.0);
  const auto frame = tilde_transform(mu, MetricField::identity(3), mu.point(mu.nearest(Vec::Zero(3)).first));
  CHECK_THROWS_AS(moment_residuals(frame, 0.2, 2, PointMatrix(3, 0)), DomainError);
  PointMatrix far(3, 1);
  far.col(0) = mu.point(mu.nearest(Vec(Eigen::Vector3d(0.3, 0.0, 0.0))).first);
  CHECK_THROWS_AS(moment_residuals(frame, 0.2, 2, far), DomainError);
  PointMatrix off(3, 1);
  off << 0.01, 0.01, 0.01;
  CHECK_THROWS_AS(moment_residuals(frame, 0.2, 2, off), DomainError);
  CHECK_THROWS_AS(moments(frame, 0.0, 2), InputError);

  const auto table = moment_residuals(frame, 0.2, 2, admissible_test_points(frame, 0.2, 10));
  const auto j = table.to_json();
  CHECK(j["rows"].size() == 10);
  CHECK(j.contains("residual_exponent"));
  CHECK(j["fitted_constant"].get<double>() == table.fitted_constant);
  const std::string csv = table.to_csv();
  CHECK(csv.rfind("y1,y2,y3,lhs,bound_shape,ratio\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 11);
}
