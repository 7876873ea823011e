#include "gridstor/conic/program.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <queue>

namespace gridstor::conic {

namespace {

struct Node {
  double bound;  // parent relaxation objective
  std::map<int, BoundOverride> fixes;
  bool operator<(const Node& o) const { return bound > o.bound; }  // min-heap
};

// Picks the branching variable: lowest class with any fractional entry,
// most fractional within that class.
int pick_branch(const Model& m, const std::vector<double>& x, double tol) {
  int best = -1, best_class = 0;
  double best_frac = -1.0;
  for (const BinaryVar& b : m.binaries()) {
    double v = x[b.var];
    double frac = std::min(v - std::floor(v), std::ceil(v) - v);
    if (frac <= tol) continue;
    if (best == -1 || b.branch_class < best_class ||
        (b.branch_class == best_class && frac > best_frac)) {
      best = b.var;
      best_class = b.branch_class;
      best_frac = frac;
    }
  }
  return best;
}

}  // namespace

MipResult solve_misocp(const Model& m, const MipSettings& st) {
  using Clock = std::chrono::steady_clock;
  auto start = Clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(Clock::now() - start).count();
  };

  MipResult res;
  Model::Result root = m.solve(st.socp);
  res.nodes_explored = 1;
  if (root.status == SolveStatus::PrimalInfeasible) {
    res.status = SolveStatus::PrimalInfeasible;
    return res;
  }
  if (root.status == SolveStatus::DualInfeasible) {
    res.status = SolveStatus::DualInfeasible;
    return res;
  }
  if ((root.status != SolveStatus::Optimal && root.status != SolveStatus::MaxIterations) ||
      root.values.empty()) {
    res.status = root.values.empty() ? SolveStatus::NumericalError : root.status;
    return res;
  }

  double incumbent = kUnbounded;
  std::vector<double> incumbent_x;

  auto integral = [&](const std::vector<double>& x) {
    for (const BinaryVar& b : m.binaries()) {
      double v = x[b.var];
      if (std::min(v - std::floor(v), std::ceil(v) - v) > st.int_tol) return false;
    }
    return true;
  };

  if (integral(root.values)) {
    res.status = SolveStatus::Optimal;
    res.values = root.values;
    res.objective = root.objective;
    res.best_bound = root.objective;
    return res;
  }

  // rounding heuristic: snap every binary to its nearest value and
  // resolve once; a feasible snap seeds the incumbent
  {
    std::map<int, BoundOverride> snap;
    for (const BinaryVar& b : m.binaries()) {
      double v = std::round(root.values[b.var]);
      snap[b.var] = {v, v};
    }
    Model::Result h = m.solve(st.socp, snap);
    res.nodes_explored++;
    if (h.status == SolveStatus::Optimal) {
      incumbent = h.objective;
      incumbent_x = h.values;
    }
  }

  std::priority_queue<Node> open;
  open.push({root.objective, {}});
  double best_bound = root.objective;

  while (!open.empty()) {
    if (res.nodes_explored >= st.max_nodes || elapsed() > st.time_limit_s) {
      res.hit_limit = true;
      break;
    }
    Node nd = open.top();
    open.pop();
    best_bound = nd.bound;
    if (std::isfinite(incumbent)) {
      double gap = incumbent - best_bound;
      if (gap <= st.abs_gap || gap <= st.rel_gap * std::max(1.0, std::abs(incumbent))) break;
    }

    Model::Result rel = m.solve(st.socp, nd.fixes);
    res.nodes_explored++;
    if (rel.status == SolveStatus::PrimalInfeasible) continue;
    if (rel.status != SolveStatus::Optimal) continue;  // prune on solver trouble
    if (rel.objective >= incumbent - st.abs_gap) continue;

    if (integral(rel.values)) {
      if (rel.objective < incumbent) {
        incumbent = rel.objective;
        incumbent_x = rel.values;
      }
      continue;
    }
    int v = pick_branch(m, rel.values, st.int_tol);
    if (v < 0) continue;
    for (double side : {0.0, 1.0}) {
      Node child = nd;
      child.bound = rel.objective;
      child.fixes[v] = {side, side};
      open.push(child);
    }
  }

  res.best_bound = open.empty() && !res.hit_limit
                       ? (std::isfinite(incumbent) ? incumbent : best_bound)
                       : best_bound;
  if (std::isfinite(incumbent)) {
    res.status = res.hit_limit && (incumbent - res.best_bound >
                                   st.rel_gap * std::max(1.0, std::abs(incumbent)))
                     ? SolveStatus::MaxIterations
                     : SolveStatus::Optimal;
    res.values = incumbent_x;
    res.objective = incumbent;
  } else if (res.hit_limit) {
    res.status = SolveStatus::MaxIterations;
  } else {
    res.status = SolveStatus::PrimalInfeasible;
  }
  return res;
}

}  // namespace gridstor::conic
