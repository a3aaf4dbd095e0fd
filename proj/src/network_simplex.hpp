#pragma once

#include "gmt/common.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace gmt::detail {

// Uncapacitated transportation problem with a hub pair.
//
// Left nodes 0..L-1 supply supply[i]; left node L is the hub source. Right
// nodes 0..R-1 demand demand[j]; right node R is the hub sink. The hub source
// supplies sum(demand) and the hub sink absorbs sum(supply). Arcs run from
// every left node to every right node with cost(i, j), where i == L or j == R
// address the hubs. All costs must be non-negative and cost(L, R) == 0.
//
// Primal network simplex on the bipartite graph with Cunningham's
// strongly feasible trees (root = hub sink), block pricing over implicit arcs.
struct TransportResult {
  double cost = 0.0;
  // Potentials with the hub sink at 0; reduced cost c(i, j) + pi_i - pi_j >= 0.
  std::vector<double> left_potential;
  std::vector<double> right_potential;
  long pivots = 0;
};

template <class Cost>
TransportResult solve_hub_transport(const std::vector<double>& supply, const std::vector<double>& demand, Cost&& cost,
                                    long max_pivots = 50000000) {
  const int L = static_cast<int>(supply.size());
  const int R = static_cast<int>(demand.size());
  // Node ids: left i -> i (hub L), right j -> L + 1 + j (hub L + 1 + R).
  const int n = L + R + 2;
  const int hub_src = L, root = L + 1 + R;
  auto arc_cost = [&](int a, int b) {  // a left, b right
    return cost(a, b - L - 1);
  };

  std::vector<int> parent(n, -1), depth(n, 0);
  std::vector<char> up(n, 0);  // tree arc oriented v -> parent[v]
  std::vector<double> flow(n, 0.0), pi(n, 0.0);
  std::vector<std::vector<int>> kids(n);

  // Initial tree: every source ships to the hub sink, the hub source feeds
  // every sink, and hub source -> hub sink carries zero flow toward the root.
  auto attach = [&](int v, int p, bool toward_parent, double f) {
    parent[v] = p;
    up[v] = toward_parent;
    flow[v] = f;
    kids[p].push_back(v);
  };
  for (int i = 0; i < L; ++i) attach(i, root, true, supply[static_cast<std::size_t>(i)]);
  attach(hub_src, root, true, 0.0);
  for (int j = 0; j < R; ++j) attach(L + 1 + j, hub_src, false, demand[static_cast<std::size_t>(j)]);

  std::vector<int> stack;
  auto refresh = [&](int top) {  // depth and potentials below `top`
    stack.assign(1, top);
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      for (int c : kids[v]) {
        depth[c] = depth[v] + 1;
        pi[c] = up[c] ? pi[v] - arc_cost(c, v) : pi[v] + arc_cost(v, c);
        stack.push_back(c);
      }
    }
  };
  refresh(root);

  double scale = 0.0;
  for (int i = 0; i <= L; ++i) scale = std::max(scale, std::abs(arc_cost(i, root)));
  if (L > 0 && R > 0) scale = std::max(scale, arc_cost(0, L + 1));
  const double tol = 1e-13 * std::max(1.0, scale);

  const long arcs = static_cast<long>(L + 1) * static_cast<long>(R + 1);
  const long block = std::max<long>(64, static_cast<long>(std::sqrt(static_cast<double>(arcs))));
  long cursor = 0;
  TransportResult out;

  std::vector<int> side_a, side_b;
  while (true) {
    // Block pricing: most negative reduced cost within the first block that has one.
    int enter_a = -1, enter_b = -1;
    double best = -tol;
    long scanned = 0;
    while (scanned < arcs) {
      const long stop = std::min(arcs, scanned + block);
      for (; scanned < stop; ++scanned) {
        const long a = cursor;
        cursor = cursor + 1 == arcs ? 0 : cursor + 1;
        const int i = static_cast<int>(a / (R + 1));
        const int j = static_cast<int>(a % (R + 1));
        const int bj = L + 1 + j;
        const double rc = arc_cost(i, bj) + pi[i] - pi[bj];
        if (rc < best) {
          best = rc;
          enter_a = i;
          enter_b = bj;
        }
      }
      if (enter_a >= 0) break;
    }
    if (enter_a < 0) break;
    if (++out.pivots > max_pivots) throw InternalError("transport: pivot limit reached");

    // Cycle: enter_a -> enter_b, then the tree path back to enter_a.
    side_a.clear();
    side_b.clear();
    int u = enter_a, v = enter_b;
    while (u != v) {
      if (depth[u] >= depth[v]) {
        side_a.push_back(u);
        u = parent[u];
      } else {
        side_b.push_back(v);
        v = parent[v];
      }
    }
    // Orientation: apex -> ... -> enter_a -> enter_b -> ... -> apex.
    // On side_a the arc at x is walked parent -> x, on side_b x -> parent.
    double theta = std::numeric_limits<double>::infinity();
    for (int x : side_a)
      if (up[x]) theta = std::min(theta, flow[x]);
    for (int x : side_b)
      if (!up[x]) theta = std::min(theta, flow[x]);
    if (!std::isfinite(theta)) throw InternalError("transport: unbounded pivot cycle");

    // Last blocking arc met along the orientation: side_b nearest the apex,
    // otherwise side_a nearest enter_a.
    int leave = -1;
    bool leave_on_b = false;
    for (int x : side_b)
      if (!up[x] && flow[x] == theta) {
        leave = x;
        leave_on_b = true;
      }
    if (leave < 0)
      for (int x : side_a)
        if (up[x] && flow[x] == theta) {
          leave = x;
          break;
        }
    if (leave < 0) throw InternalError("transport: no leaving arc");

    if (theta > 0.0) {
      for (int x : side_a) flow[x] += up[x] ? -theta : theta;
      for (int x : side_b) flow[x] += up[x] ? theta : -theta;
    }

    // Re-hang the subtree cut off by the leaving arc from the entering arc.
    const int in = leave_on_b ? enter_b : enter_a;
    const int out_end = leave_on_b ? enter_a : enter_b;
    {
      auto& sib = kids[parent[leave]];
      sib.erase(std::find(sib.begin(), sib.end(), leave));
    }
    int x = in, new_parent = out_end;
    bool new_up = (in == enter_a);  // arc enter_a -> enter_b
    double new_flow = theta;
    while (true) {
      const int old_parent = parent[x];
      const bool old_up = up[x];
      const double old_flow = flow[x];
      if (x != leave) {
        auto& sib = kids[old_parent];
        sib.erase(std::find(sib.begin(), sib.end(), x));
      }
      parent[x] = new_parent;
      up[x] = new_up;
      flow[x] = new_flow;
      kids[new_parent].push_back(x);
      if (x == leave) break;
      new_parent = x;
      new_up = !old_up;
      new_flow = old_flow;
      x = old_parent;
    }
    depth[in] = depth[out_end] + 1;
    pi[in] = up[in] ? pi[out_end] - arc_cost(in, out_end) : pi[out_end] + arc_cost(out_end, in);
    refresh(in);
  }

  for (int v = 0; v < n; ++v) {
    if (v == root) continue;
    const int p = parent[v];
    out.cost += flow[v] * (up[v] ? arc_cost(v, p) : arc_cost(p, v));
  }
  out.left_potential.assign(pi.begin(), pi.begin() + L + 1);
  out.right_potential.assign(pi.begin() + L + 1, pi.end());
  return out;
}

}  // namespace gmt::detail
