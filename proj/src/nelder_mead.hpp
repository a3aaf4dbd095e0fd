#pragma once

#include "gmt/common.hpp"

#include <algorithm>
#include <numeric>

namespace gmt::detail {

struct SimplexResult {
  Vec x;
  double value;
  int iterations;
};

/// Plain Nelder-Mead (reflection 1, expansion 2, contraction 1/2, shrink 1/2)
/// from an axis-aligned simplex of the given step.
template <class F>
SimplexResult nelder_mead(F&& f, const Vec& start, double step, int max_iterations, double tol = 1e-10) {
  const Eigen::Index m = start.size();
  if (m == 0) return {start, f(start), 0};
  std::vector<Vec> pts(static_cast<std::size_t>(m + 1), start);
  std::vector<double> val(static_cast<std::size_t>(m + 1));
  for (Eigen::Index i = 0; i < m; ++i) pts[static_cast<std::size_t>(i + 1)](i) += step;
  for (std::size_t i = 0; i < pts.size(); ++i) val[i] = f(pts[i]);

  std::vector<std::size_t> order(pts.size());
  int it = 0;
  for (; it < max_iterations; ++it) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return val[a] < val[b]; });
    const std::size_t best = order.front(), worst = order.back(), second = order[order.size() - 2];
    double size = 0.0;
    for (const auto& p : pts) size = std::max(size, (p - pts[best]).cwiseAbs().maxCoeff());
    if (val[worst] - val[best] <= tol && size <= tol) break;

    Vec centroid = Vec::Zero(m);
    for (std::size_t i = 0; i < pts.size(); ++i)
      if (i != worst) centroid += pts[i];
    centroid /= static_cast<double>(m);

    const Vec xr = centroid + (centroid - pts[worst]);
    const double fr = f(xr);
    if (fr < val[best]) {
      const Vec xe = centroid + 2.0 * (centroid - pts[worst]);
      const double fe = f(xe);
      if (fe < fr) {
        pts[worst] = xe;
        val[worst] = fe;
      } else {
        pts[worst] = xr;
        val[worst] = fr;
      }
      continue;
    }
    if (fr < val[second]) {
      pts[worst] = xr;
      val[worst] = fr;
      continue;
    }
    const bool outside = fr < val[worst];
    const Vec xc = outside ? Vec(centroid + 0.5 * (xr - centroid)) : Vec(centroid + 0.5 * (pts[worst] - centroid));
    const double fc = f(xc);
    if (fc < (outside ? fr : val[worst])) {
      pts[worst] = xc;
      val[worst] = fc;
      continue;
    }
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (i == best) continue;
      pts[i] = pts[best] + 0.5 * (pts[i] - pts[best]);
      val[i] = f(pts[i]);
    }
  }
  const auto best = static_cast<std::size_t>(std::min_element(val.begin(), val.end()) - val.begin());
  return {pts[best], val[best], it};
}

}  // namespace gmt::detail
