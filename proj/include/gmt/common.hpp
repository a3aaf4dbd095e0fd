#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace gmt {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
/// Points stored column-wise: column i is the i-th point.
using PointMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor>;

// Error taxonomy. The CLI maps InputError to a usage failure and the rest to
// analysis failures.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
};
struct InputError : Error {
  using Error::Error;
  const char* kind() const noexcept override { return "input"; }
};
struct DomainError : Error {
  using Error::Error;
  const char* kind() const noexcept override { return "domain"; }
};
struct ExtrapolationError : Error {
  using Error::Error;
  const char* kind() const noexcept override { return "extrapolation"; }
};
struct DegenerateError : Error {
  using Error::Error;
  const char* kind() const noexcept override { return "degenerate"; }
};
struct HypothesisError : Error {
  using Error::Error;
  const char* kind() const noexcept override { return "hypothesis"; }
};
struct PreconditionError : Error {
  using Error::Error;
  const char* kind() const noexcept override { return "precondition"; }
};
struct InternalError : Error {
  using Error::Error;
  const char* kind() const noexcept override { return "internal"; }
};

/// Volume of the unit ball in R^n.
double unit_ball_volume(int n);

bool all_finite(const Vec& x);

/// Throws InputError unless r is a finite positive radius.
void require_positive_radius(double r, const char* what);

/// Least-squares line through (log x, log y): y ~ coefficient * x^exponent.
/// Pairs with y <= floor are skipped. Throws DegenerateError with fewer than
/// `min_points` usable pairs or a degenerate abscissa.
struct PowerFit {
  double exponent;
  double coefficient;
  std::size_t points_used;
};
PowerFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y, double floor = 1e-12,
                       std::size_t min_points = 2);

/// Geometric ladder from `max` down to `min` with `per_octave` steps per
/// halving; both ends included. Strictly decreasing.
std::vector<double> scale_ladder(double min, double max, int per_octave);

/// Worker count, capped by GMT_ANISO_THREADS when set.
unsigned worker_count();

/// Runs body(i) for i in [0, count) across worker_count() threads.
/// Exceptions from workers are rethrown on the calling thread (first one wins).
template <class Body>
void parallel_for(std::size_t count, Body&& body);

}  // namespace gmt

#include "gmt/detail/parallel.hpp"
