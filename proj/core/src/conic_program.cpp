#include "gridstor/conic/program.hpp"

#include <cmath>
#include <stdexcept>

namespace gridstor::conic {

namespace {

// Collapses duplicate variable references in an expression.
void compress(std::vector<LinTerm>& terms) {
  if (terms.size() < 2) return;
  std::sort(terms.begin(), terms.end(),
            [](const LinTerm& a, const LinTerm& b) { return a.var < b.var; });
  size_t w = 0;
  for (size_t i = 0; i < terms.size(); ++i) {
    if (w > 0 && terms[w - 1].var == terms[i].var)
      terms[w - 1].coef += terms[i].coef;
    else
      terms[w++] = terms[i];
  }
  terms.resize(w);
}

}  // namespace

int Model::add_var(const std::string& name, double lb, double ub) {
  if (lb > ub) throw std::invalid_argument("variable " + name + ": lb > ub");
  names_.push_back(name);
  lb_.push_back(lb);
  ub_.push_back(ub);
  return static_cast<int>(names_.size()) - 1;
}

int Model::add_binary(const std::string& name, int branch_class) {
  int v = add_var(name, 0.0, 1.0);
  binaries_.push_back({v, branch_class});
  return v;
}

void Model::set_bounds(int var, double lb, double ub) {
  if (lb > ub) throw std::invalid_argument("set_bounds: lb > ub");
  lb_[var] = lb;
  ub_[var] = ub;
}

void Model::add_eq(const LinExpr& e) { eqs_.push_back(e); }
void Model::add_le(const LinExpr& e) { les_.push_back(e); }

void Model::add_soc(const LinExpr& t, const std::vector<LinExpr>& v) {
  socs_.push_back({t, v});
}

void Model::add_rotated(const LinExpr& u, const LinExpr& w, const std::vector<LinExpr>& v) {
  // 2uw >= |v|^2  <=>  |(u-w, sqrt2 v)| <= u+w
  LinExpr t = u;
  t += w;
  LinExpr head = u;
  head -= w;
  std::vector<LinExpr> body;
  body.push_back(head);
  for (LinExpr e : v) {
    e *= std::sqrt(2.0);
    body.push_back(e);
  }
  add_soc(t, body);
}

void Model::minimize(const LinExpr& obj) { objective_ = obj; }

SocpProblem Model::lower(const std::map<int, BoundOverride>& overrides) const {
  const int n = num_vars();
  SocpProblem p;
  p.c = Eigen::VectorXd::Zero(n);
  {
    LinExpr obj = objective_;
    compress(obj.terms);
    for (const LinTerm& t : obj.terms) p.c[t.var] += t.coef;
  }

  std::vector<Eigen::Triplet<double>> ta, tg;
  std::vector<double> bs, hs;
  auto eff_lb = [&](int v) {
    auto it = overrides.find(v);
    return it == overrides.end() ? lb_[v] : it->second.lb;
  };
  auto eff_ub = [&](int v) {
    auto it = overrides.find(v);
    return it == overrides.end() ? ub_[v] : it->second.ub;
  };

  auto push_row = [](std::vector<Eigen::Triplet<double>>& tr, std::vector<double>& rhs,
                     LinExpr e, double scale) {
    // emits scale * (terms) , rhs -= scale*constant
    compress(e.terms);
    int row = static_cast<int>(rhs.size());
    for (const LinTerm& t : e.terms) tr.emplace_back(row, t.var, scale * t.coef);
    rhs.push_back(-scale * e.constant);
  };

  for (const LinExpr& e : eqs_) push_row(ta, bs, e, 1.0);
  for (int v = 0; v < n; ++v) {
    double lb = eff_lb(v), ub = eff_ub(v);
    if (lb == ub) push_row(ta, bs, LinExpr::of(v).operator-=(LinExpr(lb)), 1.0);
  }

  // orthant rows: e <= 0 becomes G x + s = h with s >= 0, G = coeffs,
  // h = -constant
  for (const LinExpr& e : les_) push_row(tg, hs, e, 1.0);
  for (int v = 0; v < n; ++v) {
    double lb = eff_lb(v), ub = eff_ub(v);
    if (lb == ub) continue;
    if (std::isfinite(ub)) push_row(tg, hs, LinExpr::of(v).operator-=(LinExpr(ub)), 1.0);
    if (std::isfinite(lb)) push_row(tg, hs, LinExpr::of(v, -1.0).operator+=(LinExpr(lb)), 1.0);
  }
  p.n_lin = static_cast<int>(hs.size());

  // SOC blocks: s = h - Gx must equal (t(x), v(x)), so G rows carry the
  // negated coefficients and h the constants.
  for (const SocRow& c : socs_) {
    push_row(tg, hs, c.t, -1.0);
    for (const LinExpr& e : c.v) push_row(tg, hs, e, -1.0);
    p.soc_dims.push_back(static_cast<int>(c.v.size()) + 1);
  }

  p.A.resize(static_cast<int>(bs.size()), n);
  p.A.setFromTriplets(ta.begin(), ta.end());
  p.b = Eigen::Map<Eigen::VectorXd>(bs.data(), bs.size());
  p.G.resize(static_cast<int>(hs.size()), n);
  p.G.setFromTriplets(tg.begin(), tg.end());
  p.h = Eigen::Map<Eigen::VectorXd>(hs.data(), hs.size());
  return p;
}

Model::Result Model::solve(const SocpSettings& settings,
                           const std::map<int, BoundOverride>& overrides) const {
  SocpProblem p = lower(overrides);
  SocpSolution s = solve_socp(p, settings);
  Result r;
  r.status = s.status;
  r.iterations = s.iterations;
  if (s.status == SolveStatus::Optimal || s.status == SolveStatus::MaxIterations) {
    r.values.assign(s.x.data(), s.x.data() + s.x.size());
    r.objective = s.objective + objective_.constant;
  }
  return r;
}

}  // namespace gridstor::conic
