#include <doctest.h>

#include "gmt/measure.hpp"
#include "gmt/synth.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

using namespace gmt;

namespace {

DiscreteMeasure delta_at_origin(int d) { return DiscreteMeasure(PointMatrix::Zero(d, 1), Vec::Ones(1)); }

DiscreteMeasure random_cloud(std::size_t n, int d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> w(0.1, 2.0);
  PointMatrix p(d, static_cast<Eigen::Index>(n));
  Vec wt(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < p.cols(); ++i) {
    for (int a = 0; a < d; ++a) p(a, i) = u(rng);
    wt(i) = w(rng);
  }
  return DiscreteMeasure(std::move(p), std::move(wt));
}

std::vector<std::size_t> brute_ball(const DiscreteMeasure& mu, const Vec& x, double r) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < mu.size(); ++i)
    if ((mu.point(i) - x).norm() < r) out.push_back(i);
  return out;
}

}  // namespace

TEST_CASE("ball mass of a delta mass uses the open ball") {
  const auto mu = delta_at_origin(2);
  CHECK(mu.ball_mass(Vec::Zero(2), 0.5) == 1.0);
  Vec x(2);
  x << 1.0, 0.0;
  CHECK(mu.ball_mass(x, 1.0) == 0.0);
  CHECK_THROWS_AS(mu.ball_mass(x, 0.0), InputError);
  CHECK_THROWS_AS(mu.ball_mass(x, -1.0), InputError);
}

TEST_CASE("construction validates weights") {
  PointMatrix p = PointMatrix::Zero(2, 2);
  Vec w(2);
  w << 1.0, 0.0;
  CHECK_THROWS_AS(DiscreteMeasure(p, w), InputError);
  w << 1.0, std::nan("");
  CHECK_THROWS_AS(DiscreteMeasure(p, w), InputError);
  CHECK_THROWS_AS(DiscreteMeasure(p, Vec::Ones(3)), InputError);
}

TEST_CASE("total mass equals the weight sum") {
  const auto mu = random_cloud(1000, 3, 1);
  CHECK(mu.total_mass() == doctest::Approx(mu.weights().sum()).epsilon(1e-9));
}

TEST_CASE("kd-tree range queries match a linear scan") {
  const auto mu = random_cloud(5000, 3, 2);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.2, 1.2);
  std::uniform_real_distribution<double> rr(0.01, 0.8);
  for (int q = 0; q < 100; ++q) {
    Vec x(3);
    x << u(rng), u(rng), u(rng);
    const double r = rr(rng);
    auto got = mu.indices_in_ball(x, r);
    std::sort(got.begin(), got.end());
    CHECK(got == brute_ball(mu, x, r));

    // support_in: same set ordered by distance, ties by index.
    const auto sorted = mu.support_in(x, r);
    CHECK(sorted.size() == got.size());
    for (std::size_t k = 1; k < sorted.size(); ++k) {
      const double a = (mu.point(sorted[k - 1]) - x).norm();
      const double b = (mu.point(sorted[k]) - x).norm();
      CHECK((a < b || (a == b && sorted[k - 1] < sorted[k])));
    }
  }
}

TEST_CASE("nearest neighbour matches a linear scan") {
  const auto mu = random_cloud(3000, 2, 4);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (int q = 0; q < 100; ++q) {
    Vec x(2);
    x << u(rng), u(rng);
    double best = 1e300;
    for (std::size_t i = 0; i < mu.size(); ++i) best = std::min(best, (mu.point(i) - x).norm());
    CHECK(mu.nearest(x).second == best);
  }
}

TEST_CASE("support_in edge cases") {
  const auto mu = delta_at_origin(2);
  Vec x(2);
  x << 0.0, 1.0;
  CHECK(mu.support_in(Vec::Zero(2), 1.0) == std::vector<std::size_t>{0});
  CHECK(mu.support_in(x, 0.5).empty());
}

TEST_CASE("ball mass is monotone in the radius") {
  const auto mu = random_cloud(2000, 2, 6);
  Vec x = Vec::Zero(2);
  double prev = 0.0;
  for (double r = 0.01; r < 2.0; r *= 1.3) {
    const double m = mu.ball_mass(x, r);
    CHECK(m >= prev);
    prev = m;
  }
}

TEST_CASE("ellipse mass") {
  const auto mu = random_cloud(4000, 2, 7);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  SUBCASE("identity field equals ball mass") {
    const auto id = MetricField::identity(2);
    for (int q = 0; q < 100; ++q) {
      Vec x(2);
      x << u(rng), u(rng);
      const double r = 0.05 + std::abs(u(rng)) * 0.5;
      CHECK(mu.ellipse_mass(id, x, r) == mu.ball_mass(x, r));
    }
  }
  SUBCASE("scalar field a*I equals the ball of radius a*r") {
    const auto f = MetricField::constant(2.0 * Mat::Identity(2, 2));
    for (int q = 0; q < 100; ++q) {
      Vec x(2);
      x << u(rng), u(rng);
      const double r = 0.05 + std::abs(u(rng)) * 0.3;
      CHECK(mu.ellipse_mass(f, x, r) == mu.ball_mass(x, 2.0 * r));
    }
  }
  SUBCASE("segment measure under diag(2,1)") {
    // Line {x2 = 0} sampled with unit density; the ellipse meets it in a
    // segment of length 2*(2r), so the ratio to omega_1 (2r) = 4r is 1.
    synth::SurfaceSpec spec;
    spec.kind = synth::PlaneSpec{1, 2, 4.0};
    spec.samples = 40000;
    const auto line = synth::sample(spec);
    const auto f = MetricField::constant(Vec(Eigen::Vector2d(2.0, 1.0)).asDiagonal().toDenseMatrix());
    for (double r : {0.05, 0.1, 0.2}) {
      const Vec x = line.point(line.snap(line.point(20000)));
      CHECK(line.ellipse_mass(f, x, r) / (4.0 * r) == doctest::Approx(1.0).epsilon(0.02));
    }
  }
}

TEST_CASE("flat disk mass matches pi r^2") {
  synth::SurfaceSpec spec;
  spec.kind = synth::PlaneSpec{2, 3, 2.0};
  spec.samples = 200000;
  const auto mu = synth::sample(spec);
  Vec x = Vec::Zero(3);
  x(0) = 0.123;
  x(1) = -0.31;
  CHECK(mu.ball_mass(x, 0.2) / (std::numbers::pi * 0.04) == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("affine push-forward") {
  const auto mu = random_cloud(500, 3, 10);
  SUBCASE("identity map is bitwise identical") {
    const auto same = mu.pushforward_affine(Mat::Identity(3, 3), Vec::Zero(3), 1.0);
    CHECK(same.points() == mu.points());
    CHECK(same.weights() == mu.weights());
  }
  SUBCASE("inverse pair round trip and mass scaling") {
    const Mat lam = Vec(Eigen::Vector3d(2.0, 1.0, 1.0)).asDiagonal();
    const auto there = mu.pushforward_affine(lam.inverse(), Vec::Zero(3), 2.5);
    const auto back = there.pushforward_affine(lam, Vec::Zero(3), 0.4);
    CHECK((back.points() - mu.points()).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(there.total_mass() == doctest::Approx(2.5 * mu.total_mass()));
    // relative weights preserved
    CHECK(((there.weights() / there.total_mass()) - (mu.weights() / mu.total_mass())).cwiseAbs().maxCoeff() < 1e-15);
  }
  SUBCASE("generic rotation round trip within 1e-10 of the diameter") {
    const Mat q = Eigen::HouseholderQR<Mat>(Mat::Random(3, 3)).householderQ();
    Vec shift(3);
    shift << 0.3, -2.0, 1.0;
    const auto moved = mu.pushforward_affine(q, shift, 1.0);
    const auto back = moved.pushforward_affine(q.transpose(), -q.transpose() * shift, 1.0);
    CHECK((back.points() - mu.points()).cwiseAbs().maxCoeff() <= 1e-10 * mu.diameter_bound());
  }
  SUBCASE("singular maps and bad scales are rejected") {
    CHECK_THROWS_AS(mu.pushforward_affine(Mat::Zero(3, 3), Vec::Zero(3), 1.0), InputError);
    CHECK_THROWS_AS(mu.pushforward_affine(Mat::Identity(3, 3), Vec::Zero(3), 0.0), InputError);
  }
}

TEST_CASE("push-forward by Lambda^{-1} turns ellipses into balls") {
  // mu~ = Lambda(X0)^{-1}[mu]: B_Lambda(X, r) masses of mu equal the ball
  // masses of mu~ at Lambda^{-1} X (brute-force recount after the transform).
  synth::SurfaceSpec spec;
  spec.kind = synth::PlaneSpec{2, 3, 2.0};
  spec.samples = 40000;
  const auto mu = synth::sample(spec);
  const Mat lam = Vec(Eigen::Vector3d(2.0, 1.0, 1.0)).asDiagonal();
  const auto field = MetricField::constant(lam);
  const auto tilde = mu.pushforward_affine(lam.inverse(), Vec::Zero(3), 1.0);
  for (std::size_t i : {100u, 5000u, 20200u}) {
    const Vec x = mu.point(i);
    const Vec y = lam.inverse() * x;
    for (double r : {0.05, 0.1, 0.3}) {
      double brute = 0.0;
      for (std::size_t j = 0; j < tilde.size(); ++j)
        if ((tilde.point(j) - y).norm() < r) brute += tilde.weights()(static_cast<Eigen::Index>(j));
      CHECK(mu.ellipse_mass(field, x, r) == doctest::Approx(brute).epsilon(1e-12));
    }
  }
}

TEST_CASE("CSV round trip and validation") {
  const auto dir = std::filesystem::temp_directory_path() / "gmt_measure_test";
  std::filesystem::create_directories(dir);
  const auto mu = random_cloud(50, 3, 12);
  write_measure_csv(dir / "m.csv", mu);
  const auto back = read_measure_csv(dir / "m.csv");
  CHECK(back.points() == mu.points());
  CHECK(back.weights() == mu.weights());

  {
    std::ofstream bad(dir / "bad.csv");
    bad << "x0,x1,weight\n0,0,1\n1,1,0\n";
  }
  CHECK_THROWS_AS(read_measure_csv(dir / "bad.csv"), InputError);
  {
    std::ofstream bad(dir / "noweight.csv");
    bad << "x0,x1\n0,0\n";
  }
  CHECK_THROWS_AS(read_measure_csv(dir / "noweight.csv"), InputError);
  std::filesystem::remove_all(dir);
}
