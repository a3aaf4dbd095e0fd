#include "gmt/common.hpp"

#include <cmath>
#include <cstdlib>
#include <string>
#include <thread>

namespace gmt {

double unit_ball_volume(int n) {
  if (n < 0) throw InputError("unit_ball_volume: negative dimension");
  return std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n + 1.0);
}

bool all_finite(const Vec& x) { return x.allFinite(); }

void require_positive_radius(double r, const char* what) {
  if (!(r > 0.0) || !std::isfinite(r))
    throw InputError(std::string(what) + ": radius must be positive and finite");
}

PowerFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y, double floor,
                       std::size_t min_points) {
  if (x.size() != y.size()) throw InputError("fit_power_law: length mismatch");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(y[i] > floor) || !(x[i] > 0.0)) continue;
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  if (lx.size() < std::max<std::size_t>(min_points, 2))
    throw DegenerateError("fit_power_law: " + std::to_string(lx.size()) + " usable points, need " +
                          std::to_string(std::max<std::size_t>(min_points, 2)));
  const double n = static_cast<double>(lx.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) throw DegenerateError("fit_power_law: all abscissae equal");
  const double slope = sxy / sxx;
  return {slope, std::exp(my - slope * mx), lx.size()};
}

std::vector<double> scale_ladder(double min, double max, int per_octave) {
  if (!(min > 0.0) || !(max > min) || per_octave < 1)
    throw InputError("scale ladder needs 0 < min < max and per_octave >= 1");
  const int steps = static_cast<int>(std::ceil(std::log2(max / min) * per_octave - 1e-9));
  std::vector<double> out;
  for (int k = 0; k <= steps; ++k) out.push_back(max * std::pow(min / max, static_cast<double>(k) / steps));
  out.back() = min;
  return out;
}

unsigned worker_count() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* cap = std::getenv("GMT_ANISO_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(cap, &end, 10);
    if (end != cap && v > 0) n = std::min<unsigned>(n, static_cast<unsigned>(v));
  }
  return n;
}

}  // namespace gmt
