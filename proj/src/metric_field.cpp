#include "gmt/metric_field.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <random>

namespace gmt {

namespace {

constexpr double kSymmetryTol = 1e-12;

Mat matrix_from_json(const nlohmann::json& j, int dim) {
  Mat m(dim, dim);
  if (j.is_array() && !j.empty() && j.front().is_array()) {
    if (static_cast<int>(j.size()) != dim) throw InputError("matrix: wrong row count");
    for (int i = 0; i < dim; ++i) {
      if (static_cast<int>(j[i].size()) != dim) throw InputError("matrix: wrong column count");
      for (int k = 0; k < dim; ++k) m(i, k) = j[i][k].get<double>();
    }
    return m;
  }
  if (!j.is_array() || static_cast<int>(j.size()) != dim * dim)
    throw InputError("matrix: expected " + std::to_string(dim * dim) + " row-major entries");
  for (int i = 0; i < dim; ++i)
    for (int k = 0; k < dim; ++k) m(i, k) = j[i * dim + k].get<double>();
  return m;
}

nlohmann::json matrix_to_json(const Mat& m) {
  auto out = nlohmann::json::array();
  for (int i = 0; i < m.rows(); ++i)
    for (int k = 0; k < m.cols(); ++k) out.push_back(m(i, k));
  return out;
}

Vec vec_from_json(const nlohmann::json& j) {
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

nlohmann::json vec_to_json(const Vec& v) {
  auto out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

}  // namespace

SpdMatrix::SpdMatrix(Mat entries, Vec values, Mat vectors)
    : entries_(std::move(entries)), eigenvalues_(std::move(values)), eigenvectors_(std::move(vectors)) {}

SpdMatrix::SpdMatrix(const Mat& entries) {
  if (entries.rows() != entries.cols() || entries.rows() == 0)
    throw InputError("SpdMatrix: matrix must be square and non-empty");
  if (!entries.allFinite()) throw InputError("SpdMatrix: non-finite entries");
  const double asym = (entries - entries.transpose()).cwiseAbs().maxCoeff();
  if (asym > kSymmetryTol) throw InputError("SpdMatrix: matrix is not symmetric");
  entries_ = 0.5 * (entries + entries.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> solver(entries_);
  if (solver.info() != Eigen::Success) throw InputError("SpdMatrix: eigendecomposition failed");
  eigenvalues_ = solver.eigenvalues();
  eigenvectors_ = solver.eigenvectors();
  if (!(eigenvalues_(0) > 0.0)) throw InputError("SpdMatrix: matrix is not positive definite");
}

SpdMatrix SpdMatrix::identity(int dim) {
  return SpdMatrix(Mat::Identity(dim, dim), Vec::Ones(dim), Mat::Identity(dim, dim));
}

Mat SpdMatrix::inverse() const {
  return eigenvectors_ * eigenvalues_.cwiseInverse().asDiagonal() * eigenvectors_.transpose();
}

Vec SpdMatrix::solve(const Vec& v) const {
  return eigenvectors_ * (eigenvalues_.cwiseInverse().asDiagonal() * (eigenvectors_.transpose() * v));
}

double sym_operator_norm(const Mat& m) {
  Eigen::SelfAdjointEigenSolver<Mat> solver(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

MetricField::MetricField(int ambient_dim, FieldKind kind, double holder_exponent)
    : dim_(ambient_dim), kind_(std::move(kind)), holder_exponent_(holder_exponent) {
  if (dim_ < 2) throw InputError("MetricField: ambient dimension must be >= 2");
  if (!(holder_exponent_ > 0.0 && holder_exponent_ < 1.0))
    throw InputError("MetricField: Hoelder exponent must lie in (0,1)");
  std::visit(
      [&](const auto& k) {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, ConstantKind>) {
          if (k.matrix.dim() != dim_) throw InputError("MetricField: constant matrix dimension");
        } else if constexpr (std::is_same_v<K, SinusoidalKind>) {
          if (k.base.dim() != dim_ || k.direction.rows() != dim_ || k.direction.cols() != dim_ ||
              k.wave.size() != dim_)
            throw InputError("MetricField: sinusoidal payload dimension");
          if ((k.direction - k.direction.transpose()).cwiseAbs().maxCoeff() > kSymmetryTol)
            throw InputError("MetricField: sinusoidal direction must be symmetric");
          if (sym_operator_norm(k.direction) > 1.0 + 1e-12)
            throw InputError("MetricField: sinusoidal direction must have operator norm <= 1");
          if (!(k.amplitude >= 0.0) || !(k.amplitude < k.base.lambda_min()))
            throw InputError("MetricField: sinusoidal amplitude must be below lambda_min(base)");
          if (!std::isfinite(k.frequency)) throw InputError("MetricField: frequency");
        } else if constexpr (std::is_same_v<K, GridKind>) {
          if (k.origin.size() != dim_ || static_cast<int>(k.counts.size()) != dim_)
            throw InputError("MetricField: grid dimension");
          if (!(k.spacing > 0.0)) throw InputError("MetricField: grid spacing must be positive");
          std::size_t total = 1;
          for (int c : k.counts) {
            if (c < 1) throw InputError("MetricField: grid counts must be positive");
            total *= static_cast<std::size_t>(c);
          }
          if (k.samples.size() != total) throw InputError("MetricField: grid sample count");
          for (const auto& s : k.samples)
            if (s.dim() != dim_) throw InputError("MetricField: grid sample dimension");
        } else if constexpr (std::is_same_v<K, RigidKind>) {
          if (!k.inner || k.inner->ambient_dim() != dim_ || k.rotation.rows() != dim_ ||
              k.shift.size() != dim_)
            throw InputError("MetricField: rigid payload dimension");
          const Mat gram = k.rotation.transpose() * k.rotation;
          if ((gram - Mat::Identity(dim_, dim_)).cwiseAbs().maxCoeff() > 1e-10)
            throw InputError("MetricField: rigid rotation must be orthogonal");
        }
      },
      kind_);
}

MetricField MetricField::identity(int ambient_dim, double holder_exponent) {
  return MetricField(ambient_dim, IdentityKind{}, holder_exponent);
}

MetricField MetricField::constant(const Mat& m, double holder_exponent) {
  return MetricField(static_cast<int>(m.rows()), ConstantKind{SpdMatrix(m)}, holder_exponent);
}

MetricField MetricField::sinusoidal(const Mat& base, double amplitude, const Mat& direction,
                                    double frequency, double holder_exponent, std::optional<Vec> wave) {
  const int d = static_cast<int>(base.rows());
  return MetricField(d,
                     SinusoidalKind{SpdMatrix(base), amplitude, direction, frequency,
                                    wave.value_or(Vec::Ones(d))},
                     holder_exponent);
}

bool MetricField::is_constant() const {
  if (std::holds_alternative<IdentityKind>(kind_) || std::holds_alternative<ConstantKind>(kind_))
    return true;
  if (const auto* r = std::get_if<RigidKind>(&kind_)) return r->inner->is_constant();
  if (const auto* s = std::get_if<SinusoidalKind>(&kind_))
    return s->amplitude == 0.0 || s->frequency == 0.0;
  return false;
}

SpdMatrix MetricField::eval(const Vec& x) const {
  if (x.size() != dim_) throw InputError("MetricField::eval: point dimension mismatch");
  if (!x.allFinite()) throw InputError("MetricField::eval: non-finite point");
  return std::visit(
      [&](const auto& k) -> SpdMatrix {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, IdentityKind>) {
          return SpdMatrix::identity(dim_);
        } else if constexpr (std::is_same_v<K, ConstantKind>) {
          return k.matrix;
        } else if constexpr (std::is_same_v<K, SinusoidalKind>) {
          const double phase = k.frequency * k.wave.dot(x);
          return SpdMatrix(k.base.entries() + k.amplitude * std::sin(phase) * k.direction);
        } else if constexpr (std::is_same_v<K, GridKind>) {
          return eval_grid(k, x);
        } else {
          const SpdMatrix inner = k.inner->eval(k.rotation.transpose() * (x - k.shift));
          const Mat m = k.rotation * inner.entries() * k.rotation.transpose();
          return SpdMatrix(0.5 * (m + m.transpose()));
        }
      },
      kind_);
}

SpdMatrix MetricField::eval_grid(const GridKind& g, const Vec& x) const {
  // Continuous grid coordinates; the hull is [0, counts-1] along every axis.
  Vec u = (x - g.origin) / g.spacing;
  for (int a = 0; a < dim_; ++a) {
    const double hi = g.counts[a] - 1;
    if (u(a) < -1e-12 || u(a) > hi + 1e-12)
      throw ExtrapolationError("MetricField: point outside the grid hull");
    u(a) = std::clamp(u(a), 0.0, hi);
  }
  auto flat = [&](const std::vector<int>& idx) {
    std::size_t f = 0;
    for (int a = 0; a < dim_; ++a) f = f * static_cast<std::size_t>(g.counts[a]) + idx[a];
    return f;
  };
  std::vector<int> idx(dim_);
  if (g.interpolation == GridInterpolation::nearest) {
    for (int a = 0; a < dim_; ++a) idx[a] = static_cast<int>(std::lround(u(a)));
    return g.samples[flat(idx)];
  }
  std::vector<int> base(dim_);
  Vec frac(dim_);
  for (int a = 0; a < dim_; ++a) {
    base[a] = std::min(static_cast<int>(std::floor(u(a))), std::max(0, g.counts[a] - 2));
    frac(a) = g.counts[a] > 1 ? u(a) - base[a] : 0.0;
  }
  Mat acc = Mat::Zero(dim_, dim_);
  for (unsigned corner = 0; corner < (1u << dim_); ++corner) {
    double w = 1.0;
    for (int a = 0; a < dim_; ++a) {
      const bool up = (corner >> a) & 1u;
      if (up && g.counts[a] == 1) {
        w = 0.0;
        break;
      }
      idx[a] = base[a] + (up ? 1 : 0);
      w *= up ? frac(a) : 1.0 - frac(a);
    }
    if (w == 0.0) continue;
    acc += w * g.samples[flat(idx)].entries();
  }
  acc = 0.5 * (acc + acc.transpose());
  try {
    return SpdMatrix(acc);
  } catch (const InputError&) {
    throw DomainError("MetricField: interpolated grid matrix is not SPD");
  }
}

MetricField MetricField::rigid_transformed(const Mat& rotation, const Vec& shift) const {
  return MetricField(dim_, RigidKind{std::make_shared<const MetricField>(*this), rotation, shift},
                     holder_exponent_);
}

nlohmann::json MetricField::to_json() const {
  nlohmann::json j;
  j["ambient_dim"] = dim_;
  j["holder_exponent"] = holder_exponent_;
  std::visit(
      [&](const auto& k) {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, IdentityKind>) {
          j["kind"] = "identity";
        } else if constexpr (std::is_same_v<K, ConstantKind>) {
          j["kind"] = "constant";
          j["matrix"] = matrix_to_json(k.matrix.entries());
        } else if constexpr (std::is_same_v<K, SinusoidalKind>) {
          j["kind"] = "sinusoidal";
          j["base"] = matrix_to_json(k.base.entries());
          j["amplitude"] = k.amplitude;
          j["direction"] = matrix_to_json(k.direction);
          j["frequency"] = k.frequency;
          j["wave_vector"] = vec_to_json(k.wave);
        } else if constexpr (std::is_same_v<K, GridKind>) {
          j["kind"] = "grid";
          j["origin"] = vec_to_json(k.origin);
          j["spacing"] = k.spacing;
          j["counts"] = k.counts;
          j["interpolation"] = k.interpolation == GridInterpolation::nearest ? "nearest" : "multilinear";
          auto samples = nlohmann::json::array();
          for (const auto& s : k.samples) samples.push_back(matrix_to_json(s.entries()));
          j["samples"] = samples;
        } else {
          j["kind"] = "rigid";
          j["inner"] = k.inner->to_json();
          j["rotation"] = matrix_to_json(k.rotation);
          j["shift"] = vec_to_json(k.shift);
        }
      },
      kind_);
  return j;
}

MetricField MetricField::from_json(const nlohmann::json& j) {
  try {
    const std::string kind = j.at("kind").get<std::string>();
    const int d = j.at("ambient_dim").get<int>();
    const double beta = j.value("holder_exponent", 0.5);
    if (kind == "identity") return identity(d, beta);
    if (kind == "constant") return constant(matrix_from_json(j.at("matrix"), d), beta);
    if (kind == "sinusoidal") {
      std::optional<Vec> wave;
      if (j.contains("wave_vector")) wave = vec_from_json(j.at("wave_vector"));
      const Mat direction =
          j.contains("direction") ? matrix_from_json(j.at("direction"), d) : Mat::Identity(d, d);
      return sinusoidal(matrix_from_json(j.at("base"), d), j.at("amplitude").get<double>(), direction,
                        j.at("frequency").get<double>(), beta, wave);
    }
    if (kind == "grid") {
      GridKind g;
      g.origin = vec_from_json(j.at("origin"));
      g.spacing = j.at("spacing").get<double>();
      g.counts = j.at("counts").get<std::vector<int>>();
      const std::string interp = j.value("interpolation", std::string("multilinear"));
      if (interp == "nearest")
        g.interpolation = GridInterpolation::nearest;
      else if (interp == "multilinear")
        g.interpolation = GridInterpolation::multilinear;
      else
        throw InputError("field: unknown interpolation '" + interp + "'");
      for (const auto& s : j.at("samples")) g.samples.emplace_back(matrix_from_json(s, d));
      return MetricField(d, std::move(g), beta);
    }
    if (kind == "rigid") {
      return from_json(j.at("inner"))
          .rigid_transformed(matrix_from_json(j.at("rotation"), d), vec_from_json(j.at("shift")));
    }
    throw InputError("field: unknown kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("field: malformed JSON: ") + e.what());
  }
}

double Box::distance(const Vec& x) const {
  double s = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double excess = std::max({lo(i) - x(i), 0.0, x(i) - hi(i)});
    s += excess * excess;
  }
  return std::sqrt(s);
}

CompactBounds CompactBounds::from_extremes(double lmin, double lmax, double holder) {
  CompactBounds b{};
  b.lambda_min_K = lmin;
  b.lambda_max_K = lmax;
  b.eccentricity = lmax / lmin;
  b.delta_K = std::min(lmin, 1.0 / b.eccentricity);
  b.m_K = (2.0 + b.eccentricity) * lmax;
  b.holder_constant = holder;
  return b;
}

CompactBounds compact_bounds(const MetricField& field, const PointMatrix& support, const Box& k,
                             double neighborhood, std::size_t max_pairs, std::uint64_t seed) {
  if (support.rows() != field.ambient_dim()) throw InputError("compact_bounds: dimension mismatch");
  std::vector<Eigen::Index> near;
  for (Eigen::Index i = 0; i < support.cols(); ++i)
    if (k.distance(support.col(i)) <= neighborhood) near.push_back(i);
  if (near.empty()) throw DomainError("compact_bounds: no support point within the neighborhood of K");

  std::vector<Mat> values;
  values.reserve(near.size());
  double lmin = std::numeric_limits<double>::infinity();
  double lmax = 0.0;
  for (auto i : near) {
    const SpdMatrix m = field.eval(support.col(i));
    lmin = std::min(lmin, m.lambda_min());
    lmax = std::max(lmax, m.lambda_max());
    values.push_back(m.entries());
  }

  double holder = 0.0;
  if (!field.is_constant() && near.size() > 1) {
    const double beta = field.holder_exponent();
    auto ratio = [&](std::size_t a, std::size_t b) {
      const double dist = (support.col(near[a]) - support.col(near[b])).norm();
      if (dist == 0.0) return 0.0;
      return sym_operator_norm(values[a] - values[b]) / std::pow(dist, beta);
    };
    const std::size_t n = near.size();
    if (n * (n - 1) / 2 <= max_pairs) {
      for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a + 1; b < n; ++b) holder = std::max(holder, ratio(a, b));
    } else {
      std::mt19937_64 rng(seed);
      std::uniform_int_distribution<std::size_t> pick(0, n - 1);
      for (std::size_t p = 0; p < max_pairs; ++p) {
        const std::size_t a = pick(rng);
        std::size_t b = pick(rng);
        if (a == b) b = (b + 1) % n;
        holder = std::max(holder, ratio(a, b));
      }
    }
  }
  CompactBounds out = CompactBounds::from_extremes(lmin, lmax, holder);
  out.points_used = near.size();
  return out;
}

bool ellipse_contains(const MetricField& field, const Vec& x, double r, const Vec& z) {
  require_positive_radius(r, "ellipse_contains");
  if (z.size() != x.size()) throw InputError("ellipse_contains: dimension mismatch");
  return field.eval(x).solve(z - x).norm() < r;
}

NestedRadii nested_radii(const MetricField& field, const Vec& x, const Vec& y, double r,
                         const CompactBounds& bounds) {
  require_positive_radius(r, "nested_radii");
  const double beta = field.holder_exponent();
  const double lmin_x = field.eval(x).lambda_min();
  const double dist = (x - y).norm();
  const double rho = std::max(1.0, dist / r);
  const double inv_lk = 1.0 / bounds.lambda_min_K;
  const double c_k =
      bounds.holder_constant * (inv_lk * inv_lk * std::pow(rho, 1.0 + beta) + inv_lk * std::pow(rho, beta));
  const double correction = c_k * std::pow(r, 1.0 + beta);

  NestedRadii out{r + dist / lmin_x + correction, std::nullopt, c_k};
  if (dist <= lmin_x * r / 2.0) {
    const double inner = r - dist / lmin_x - correction;
    if (inner > 0.0) out.inner = inner;
  }
  return out;
}

}  // namespace gmt
