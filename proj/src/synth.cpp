#include "gmt/synth.hpp"

#include "gmt/halton.hpp"

#include <cmath>
#include <random>

namespace gmt::synth {

namespace {

using std::numbers::pi;

constexpr double kApexWeightFraction = 1e-3;

std::size_t lattice_side(std::size_t samples, int n) {
  const auto k = static_cast<std::size_t>(std::llround(std::pow(static_cast<double>(samples), 1.0 / n)));
  return std::max<std::size_t>(k, 1);
}

DiscreteMeasure sample_plane(const PlaneSpec& s, std::size_t samples) {
  if (s.n < 1 || s.ambient_dim < s.n || !(s.extent > 0.0)) throw InputError("plane spec: invalid n/extent");
  const std::size_t k = lattice_side(samples, s.n);
  std::size_t total = 1;
  for (int a = 0; a < s.n; ++a) total *= k;
  const double h = s.extent / static_cast<double>(k);
  PointMatrix pts = PointMatrix::Zero(s.ambient_dim, static_cast<Eigen::Index>(total));
  for (std::size_t i = 0; i < total; ++i) {
    std::size_t rem = i;
    for (int a = s.n - 1; a >= 0; --a) {
      pts(a, static_cast<Eigen::Index>(i)) = -0.5 * s.extent + (static_cast<double>(rem % k) + 0.5) * h;
      rem /= k;
    }
  }
  return DiscreteMeasure(std::move(pts), Vec::Constant(static_cast<Eigen::Index>(total), std::pow(h, s.n)));
}

DiscreteMeasure sample_sphere(const SphereSpec& s, std::size_t samples) {
  if (!(s.radius > 0.0) || !(s.cap_angle > 0.0) || s.cap_angle > pi + 1e-12)
    throw InputError("sphere spec: invalid radius/cap angle");
  const auto count = static_cast<Eigen::Index>(std::max<std::size_t>(samples, 1));
  const double theta = std::min(s.cap_angle, pi);
  PointMatrix pts(s.ambient_dim, count);
  if (s.polar_rings && s.ambient_dim != 3) throw InputError("sphere spec: polar_rings needs ambient_dim 3");
  if (s.ambient_dim == 2) {
    // Equal arcs of the cap around +x1: angles in (-theta, theta).
    const double arc = 2.0 * theta * s.radius;
    for (Eigen::Index i = 0; i < count; ++i) {
      const double a = -theta + 2.0 * theta * (static_cast<double>(i) + 0.5) / static_cast<double>(count);
      pts(0, i) = s.radius * std::sin(a);
      pts(1, i) = s.radius * std::cos(a);
    }
    return DiscreteMeasure(std::move(pts), Vec::Constant(count, arc / static_cast<double>(count)));
  }
  if (s.ambient_dim != 3) throw InputError("sphere spec: ambient dimension must be 2 or 3");
  const double golden = pi * (3.0 - std::sqrt(5.0));
  const double zmin = std::cos(theta);
  if (s.polar_rings) {
    // Area inside chord c around the pole is pi c^2, so equal strata in c^2.
    const Eigen::Index rings = std::max<Eigen::Index>((count - 1) / 3, 1);
    const double c2max = 2.0 * s.radius * s.radius * (1.0 - zmin);
    const double w = pi * c2max / static_cast<double>(rings) / 3.0;
    PointMatrix rp(3, 3 * rings + 1);
    Vec weights = Vec::Constant(3 * rings + 1, w);
    rp.col(0) << 0.0, 0.0, s.radius;
    weights(0) = kApexWeightFraction * w;
    for (Eigen::Index j = 0; j < rings; ++j) {
      const double c2 = c2max * (static_cast<double>(j) + 0.5) / static_cast<double>(rings);
      const double rho = std::sqrt(c2 * (1.0 - c2 / (4.0 * s.radius * s.radius)));
      const double z = s.radius - c2 / (2.0 * s.radius);
      for (int k = 0; k < 3; ++k) {
        const double phi = golden * static_cast<double>(j) + 2.0 * pi * k / 3.0;
        rp.col(1 + 3 * j + k) << rho * std::cos(phi), rho * std::sin(phi), z;
      }
    }
    return DiscreteMeasure(std::move(rp), std::move(weights));
  }
  // Fibonacci lattice restricted to the cap: equal-area bands in z.
  for (Eigen::Index i = 0; i < count; ++i) {
    const double z = 1.0 - (1.0 - zmin) * (static_cast<double>(i) + 0.5) / static_cast<double>(count);
    const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden * static_cast<double>(i);
    pts(0, i) = s.radius * rho * std::cos(phi);
    pts(1, i) = s.radius * rho * std::sin(phi);
    pts(2, i) = s.radius * z;
  }
  const double area = 2.0 * pi * s.radius * s.radius * (1.0 - zmin);
  return DiscreteMeasure(std::move(pts), Vec::Constant(count, area / static_cast<double>(count)));
}

DiscreteMeasure sample_cone(const ConeSpec& s, std::size_t samples) {
  if (!(s.extent > 0.0) || s.inner_extent < 0.0 || s.inner_extent >= s.extent)
    throw InputError("cone spec: need 0 <= inner_extent < extent");
  const std::size_t per_nappe = std::max<std::size_t>(samples / 2, 1);
  const double lo3 = std::pow(s.inner_extent, 3);
  const double hi3 = std::pow(s.extent, 3);
  const double nappe_area = std::sqrt(2.0) * (4.0 / 3.0) * pi * (hi3 - lo3);
  const double w = nappe_area / static_cast<double>(per_nappe);
  // Hammersley set per nappe: midpoint strata in |y|^3 (exact radial mass
  // counts from the apex), radical inverses in bases 2 and 3 for the
  // direction. The apex itself is added as a support point of negligible mass.
  const bool apex = s.inner_extent == 0.0;
  const std::size_t total = 2 * per_nappe + (apex ? 1 : 0);
  PointMatrix pts(4, static_cast<Eigen::Index>(total));
  Vec weights = Vec::Constant(static_cast<Eigen::Index>(total), w);
  std::size_t col = 0;
  if (apex) {
    pts.col(0).setZero();
    weights(0) = kApexWeightFraction * w;
    ++col;
  }
  for (int nappe = 0; nappe < 2; ++nappe) {
    const double sign = nappe == 0 ? 1.0 : -1.0;
    for (std::size_t i = 0; i < per_nappe; ++i, ++col) {
      const double u = (static_cast<double>(i) + 0.5) / static_cast<double>(per_nappe);
      const double v = radical_inverse(i, 2);
      const double t = radical_inverse(i, 3);
      const double rho = std::cbrt(lo3 + u * (hi3 - lo3));
      const double z = 1.0 - 2.0 * v;
      const double ring = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double phi = 2.0 * pi * t;
      const auto c = static_cast<Eigen::Index>(col);
      pts(0, c) = rho * ring * std::cos(phi);
      pts(1, c) = rho * ring * std::sin(phi);
      pts(2, c) = rho * z;
      pts(3, c) = sign * rho;
    }
  }
  return DiscreteMeasure(std::move(pts), std::move(weights));
}

struct GraphModes {
  std::vector<Eigen::Vector2d> directions;
  std::vector<double> phases;
};

GraphEval eval_with_modes(const HolderGraphSpec& s, const GraphModes& modes, const Eigen::Vector2d& x);

GraphModes graph_modes(const HolderGraphSpec& s) {
  std::mt19937_64 rng(s.seed);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * pi);
  GraphModes m;
  const int per = std::max(1, s.modes_per_octave);
  for (int j = 0; j < s.octaves; ++j) {
    // Directions of one octave are evenly spread from a random offset.
    const double a0 = angle(rng);
    for (int k = 0; k < per; ++k) {
      const double a = a0 + pi * k / per;
      m.directions.emplace_back(std::cos(a), std::sin(a));
      m.phases.push_back(angle(rng));
    }
  }
  return m;
}

DiscreteMeasure sample_holder_graph(const HolderGraphSpec& s, std::size_t samples) {
  if (!(s.gamma > 0.0 && s.gamma < 1.0) || !(s.extent > 0.0) || s.octaves < 1 || s.modes_per_octave < 1 ||
      !(s.amplitude >= 0.0))
    throw InputError("holder graph spec: invalid parameters");
  double slope_bound = 0.0;
  for (int j = 0; j < s.octaves; ++j) slope_bound += std::pow(4.0, -j * s.gamma);
  if (s.amplitude * slope_bound > 1.0)
    throw InputError("holder graph spec: amplitude exceeds the 45-degree slope cap");
  const GraphModes modes = graph_modes(s);
  const std::size_t k = lattice_side(samples, 2);
  const double h = s.extent / static_cast<double>(k);
  const auto total = static_cast<Eigen::Index>(k * k);
  PointMatrix pts(3, total);
  Vec w(total);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const Eigen::Vector2d x(-0.5 * s.extent + (static_cast<double>(i) + 0.5) * h,
                              -0.5 * s.extent + (static_cast<double>(j) + 0.5) * h);
      const GraphEval g = eval_with_modes(s, modes, x);
      const auto c = static_cast<Eigen::Index>(i * k + j);
      pts(0, c) = x(0);
      pts(1, c) = x(1);
      pts(2, c) = g.value;
      w(c) = h * h * std::sqrt(1.0 + g.gradient.squaredNorm());
    }
  }
  return DiscreteMeasure(std::move(pts), std::move(w));
}

DiscreteMeasure sample_crossing(const CrossingPlanesSpec& s, std::size_t samples) {
  if (!(s.extent > 0.0)) throw InputError("crossing planes spec: invalid extent");
  // Odd lattice side so that the crossing line x2 = x3 = 0 is a lattice row.
  std::size_t k = lattice_side(std::max<std::size_t>(samples / 2, 1), 2);
  if (k % 2 == 0) ++k;
  const double h = s.extent / static_cast<double>(k);
  const auto half = static_cast<long>(k / 2);
  std::vector<double> coords;
  std::vector<double> weights;
  for (long i = -half; i <= half; ++i) {
    for (long j = -half; j <= half; ++j) {
      // Plane {x3 = 0}; line points carry the cells of both planes.
      coords.insert(coords.end(), {i * h, j * h, 0.0});
      weights.push_back(j == 0 ? 2.0 * h * h : h * h);
      if (j != 0) {
        coords.insert(coords.end(), {i * h, 0.0, j * h});
        weights.push_back(h * h);
      }
    }
  }
  const auto total = static_cast<Eigen::Index>(weights.size());
  PointMatrix pts = Eigen::Map<PointMatrix>(coords.data(), 3, total);
  return DiscreteMeasure(std::move(pts), Eigen::Map<Vec>(weights.data(), total));
}

Vec apply_density(const DiscreteMeasure& mu, const DensityModulation& density, double scale) {
  Vec w = mu.weights() * scale;
  std::visit(
      [&](const auto& d) {
        using D = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<D, RadialPowerDensity>) {
          if (d.center.size() != mu.dim()) throw InputError("density: center dimension");
          for (std::size_t i = 0; i < mu.size(); ++i) {
            const double dist = (mu.point(i) - d.center).norm();
            w(static_cast<Eigen::Index>(i)) *= 1.0 + d.amplitude * std::pow(dist, d.exponent);
          }
        } else if constexpr (std::is_same_v<D, SineDensity>) {
          if (d.axis < 0 || d.axis >= mu.dim()) throw InputError("density: axis out of range");
          if (!(std::abs(d.amplitude) < 1.0)) throw InputError("density: sine amplitude must be below 1");
          for (std::size_t i = 0; i < mu.size(); ++i)
            w(static_cast<Eigen::Index>(i)) *=
                1.0 + d.amplitude * std::sin(d.frequency * mu.points()(d.axis, static_cast<Eigen::Index>(i)));
        }
      },
      density);
  return w;
}

Mat mat_from_json(const nlohmann::json& j) {
  const auto rows = j.size();
  if (rows == 0 || !j.front().is_array()) throw InputError("matrix must be an array of rows");
  Mat m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(j.front().size()));
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < j[r].size(); ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
  return m;
}

Vec vec_from(const nlohmann::json& j) {
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

nlohmann::json to_json_vec(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

nlohmann::json to_json_mat(const Mat& m) {
  auto out = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    auto row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(row);
  }
  return out;
}

}  // namespace

namespace {

GraphEval eval_with_modes(const HolderGraphSpec& s, const GraphModes& modes, const Eigen::Vector2d& x) {
  GraphEval g{0.0, Eigen::Vector2d::Zero()};
  const int per = std::max(1, s.modes_per_octave);
  for (int j = 0; j < s.octaves; ++j) {
    const double freq = std::pow(4.0, j);
    const double amp = s.amplitude * std::pow(4.0, -j * (1.0 + s.gamma)) / per;
    for (int k = 0; k < per; ++k) {
      const auto q = static_cast<std::size_t>(j * per + k);
      const double arg = freq * modes.directions[q].dot(x) + modes.phases[q];
      g.value += amp * std::sin(arg);
      g.gradient += amp * freq * std::cos(arg) * modes.directions[q];
    }
  }
  return g;
}

}  // namespace

GraphEval holder_graph_eval(const HolderGraphSpec& s, const Eigen::Vector2d& x) {
  return eval_with_modes(s, graph_modes(s), x);
}

int SurfaceSpec::ambient_dim() const {
  return std::visit(
      [](const auto& k) -> int {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, PlaneSpec>) return k.ambient_dim;
        else if constexpr (std::is_same_v<K, SphereSpec>) return k.ambient_dim;
        else if constexpr (std::is_same_v<K, ConeSpec>) return 4;
        else if constexpr (std::is_same_v<K, AffineImageSpec>) return k.inner->ambient_dim();
        else return 3;
      },
      kind);
}

int SurfaceSpec::surface_dim() const {
  return std::visit(
      [](const auto& k) -> int {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, PlaneSpec>) return k.n;
        else if constexpr (std::is_same_v<K, SphereSpec>) return k.ambient_dim - 1;
        else if constexpr (std::is_same_v<K, ConeSpec>) return 3;
        else if constexpr (std::is_same_v<K, AffineImageSpec>) return k.inner->surface_dim();
        else return 2;
      },
      kind);
}

DiscreteMeasure sample(const SurfaceSpec& spec) {
  if (spec.samples == 0) throw InputError("surface spec: sample count must be positive");
  if (!(spec.weight_scale > 0.0)) throw InputError("surface spec: weight_scale must be positive");
  DiscreteMeasure base = std::visit(
      [&](const auto& k) -> DiscreteMeasure {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, PlaneSpec>) return sample_plane(k, spec.samples);
        else if constexpr (std::is_same_v<K, SphereSpec>) return sample_sphere(k, spec.samples);
        else if constexpr (std::is_same_v<K, ConeSpec>) return sample_cone(k, spec.samples);
        else if constexpr (std::is_same_v<K, HolderGraphSpec>) return sample_holder_graph(k, spec.samples);
        else if constexpr (std::is_same_v<K, CrossingPlanesSpec>) return sample_crossing(k, spec.samples);
        else {
          if (!k.inner) throw InputError("affine image spec: missing inner spec");
          const DiscreteMeasure inner = sample(*k.inner);
          const Vec shift = k.shift.size() == 0 ? Vec::Zero(inner.dim()) : k.shift;
          return inner.pushforward_affine(k.matrix, shift, 1.0);
        }
      },
      spec.kind);
  if (std::holds_alternative<std::monostate>(spec.density) && spec.weight_scale == 1.0) return base;
  return base.with_weights(apply_density(base, spec.density, spec.weight_scale));
}

std::optional<double> analytic_mass(const SurfaceSpec& spec, const Vec& x, double r) {
  if (!std::holds_alternative<std::monostate>(spec.density)) return std::nullopt;
  if (!(r > 0.0)) return std::nullopt;
  const double scale = spec.weight_scale;
  return std::visit(
      [&](const auto& k) -> std::optional<double> {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, PlaneSpec>) {
          if (x.size() != k.ambient_dim) return std::nullopt;
          for (int a = k.n; a < k.ambient_dim; ++a)
            if (std::abs(x(a)) > 1e-12) return std::nullopt;
          for (int a = 0; a < k.n; ++a)
            if (std::abs(x(a)) + r > 0.5 * k.extent) return std::nullopt;
          return scale * unit_ball_volume(k.n) * std::pow(r, k.n);
        } else if constexpr (std::is_same_v<K, ConeSpec>) {
          if (x.size() != 4 || x.norm() > 1e-12 || k.inner_extent > 0.0) return std::nullopt;
          if (r > std::sqrt(2.0) * k.extent) return std::nullopt;
          return scale * unit_ball_volume(3) * r * r * r;
        } else if constexpr (std::is_same_v<K, SphereSpec>) {
          if (x.size() != k.ambient_dim || std::abs(x.norm() - k.radius) > 1e-9) return std::nullopt;
          if (r >= 2.0 * k.radius) return std::nullopt;
          // The ball must stay inside the sampled cap.
          const double half_angle = 2.0 * std::asin(r / (2.0 * k.radius));
          const double polar = std::acos(std::clamp(x(k.ambient_dim - 1) / k.radius, -1.0, 1.0));
          if (k.cap_angle < std::numbers::pi && polar + half_angle > k.cap_angle) return std::nullopt;
          if (k.ambient_dim == 2) return scale * 2.0 * k.radius * half_angle;
          // Cap of chordal radius r has area pi r^2, independently of R.
          return scale * std::numbers::pi * r * r;
        } else {
          return std::nullopt;
        }
      },
      spec.kind);
}

std::optional<double> analytic_total_mass(const SurfaceSpec& spec) {
  if (!std::holds_alternative<std::monostate>(spec.density)) return std::nullopt;
  return std::visit(
      [&](const auto& k) -> std::optional<double> {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, PlaneSpec>) {
          return spec.weight_scale * std::pow(k.extent, k.n);
        } else if constexpr (std::is_same_v<K, ConeSpec>) {
          return spec.weight_scale * 2.0 * std::sqrt(2.0) * (4.0 / 3.0) * std::numbers::pi *
                 (std::pow(k.extent, 3) - std::pow(k.inner_extent, 3));
        } else if constexpr (std::is_same_v<K, SphereSpec>) {
          if (k.ambient_dim == 2) return spec.weight_scale * 2.0 * k.cap_angle * k.radius;
          return spec.weight_scale * 2.0 * std::numbers::pi * k.radius * k.radius * (1.0 - std::cos(k.cap_angle));
        } else if constexpr (std::is_same_v<K, CrossingPlanesSpec>) {
          return spec.weight_scale * 2.0 * k.extent * k.extent;
        } else {
          return std::nullopt;
        }
      },
      spec.kind);
}

nlohmann::json SurfaceSpec::to_json() const {
  nlohmann::json j;
  std::visit(
      [&](const auto& k) {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, PlaneSpec>) {
          j = {{"kind", "plane"}, {"n", k.n}, {"ambient_dim", k.ambient_dim}, {"extent", k.extent}};
        } else if constexpr (std::is_same_v<K, SphereSpec>) {
          j = {{"kind", "sphere"}, {"radius", k.radius}, {"ambient_dim", k.ambient_dim}, {"cap_angle", k.cap_angle}};
          if (k.polar_rings) j["polar_rings"] = true;
        } else if constexpr (std::is_same_v<K, ConeSpec>) {
          j = {{"kind", "kp_cone"}, {"extent", k.extent}, {"inner_extent", k.inner_extent}};
        } else if constexpr (std::is_same_v<K, HolderGraphSpec>) {
          j = {{"kind", "holder_graph"}, {"gamma", k.gamma},   {"amplitude", k.amplitude},
               {"extent", k.extent},     {"octaves", k.octaves}, {"modes_per_octave", k.modes_per_octave},
               {"seed", k.seed}};
        } else if constexpr (std::is_same_v<K, CrossingPlanesSpec>) {
          j = {{"kind", "crossing_planes"}, {"extent", k.extent}};
        } else {
          j = {{"kind", "affine_image"}, {"inner", k.inner->to_json()}, {"matrix", to_json_mat(k.matrix)}};
          if (k.shift.size() > 0) j["shift"] = to_json_vec(k.shift);
        }
      },
      kind);
  j["samples"] = samples;
  if (weight_scale != 1.0) j["weight_scale"] = weight_scale;
  std::visit(
      [&](const auto& d) {
        using D = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<D, RadialPowerDensity>) {
          j["density"] = {{"kind", "radial_power"}, {"center", to_json_vec(d.center)},
                          {"amplitude", d.amplitude}, {"exponent", d.exponent}};
        } else if constexpr (std::is_same_v<D, SineDensity>) {
          j["density"] = {{"kind", "sine"}, {"amplitude", d.amplitude}, {"frequency", d.frequency}, {"axis", d.axis}};
        }
      },
      density);
  return j;
}

SurfaceSpec SurfaceSpec::from_json(const nlohmann::json& j) {
  try {
    SurfaceSpec s;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "plane") {
      PlaneSpec p;
      p.n = j.value("n", 2);
      p.ambient_dim = j.value("ambient_dim", p.n + 1);
      p.extent = j.value("extent", 2.0);
      s.kind = p;
    } else if (kind == "sphere") {
      SphereSpec p;
      p.radius = j.value("radius", 1.0);
      p.ambient_dim = j.value("ambient_dim", 3);
      p.cap_angle = j.value("cap_angle", std::numbers::pi);
      p.polar_rings = j.value("polar_rings", false);
      s.kind = p;
    } else if (kind == "kp_cone") {
      ConeSpec p;
      p.extent = j.value("extent", 1.0);
      p.inner_extent = j.value("inner_extent", 0.0);
      s.kind = p;
    } else if (kind == "holder_graph") {
      HolderGraphSpec p;
      p.gamma = j.value("gamma", 0.5);
      p.amplitude = j.value("amplitude", 0.1);
      p.extent = j.value("extent", 1.0);
      p.octaves = j.value("octaves", 5);
      p.modes_per_octave = j.value("modes_per_octave", 3);
      p.seed = j.value("seed", std::uint64_t{1});
      s.kind = p;
    } else if (kind == "crossing_planes") {
      s.kind = CrossingPlanesSpec{j.value("extent", 2.0)};
    } else if (kind == "affine_image") {
      AffineImageSpec p;
      p.inner = std::make_shared<const SurfaceSpec>(from_json(j.at("inner")));
      p.matrix = mat_from_json(j.at("matrix"));
      if (j.contains("shift")) p.shift = vec_from(j.at("shift"));
      s.kind = p;
    } else {
      throw InputError("surface spec: unknown kind '" + kind + "'");
    }
    s.samples = j.value("samples", std::size_t{100000});
    s.weight_scale = j.value("weight_scale", 1.0);
    if (j.contains("density")) {
      const auto& d = j.at("density");
      const std::string dk = d.at("kind").get<std::string>();
      if (dk == "radial_power")
        s.density = RadialPowerDensity{vec_from(d.at("center")), d.at("amplitude").get<double>(),
                                       d.at("exponent").get<double>()};
      else if (dk == "sine")
        s.density = SineDensity{d.at("amplitude").get<double>(), d.value("frequency", 1.0), d.value("axis", 0)};
      else
        throw InputError("surface spec: unknown density kind '" + dk + "'");
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("surface spec: malformed JSON: ") + e.what());
  }
}

MetricField make_field(const std::string& kind, const nlohmann::json& params) {
  nlohmann::json j = params;
  j["kind"] = kind;
  return MetricField::from_json(j);
}

}  // namespace gmt::synth
