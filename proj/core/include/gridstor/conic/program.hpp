#pragma once

// Modeling layer on top of the cone solver: named bounded variables,
// linear equalities/inequalities, second-order and rotated cones, and
// relaxed binaries for the branch-and-bound driver.

#include <limits>
#include <map>
#include <string>
#include <vector>

#include "gridstor/conic/socp.hpp"

namespace gridstor::conic {

constexpr double kUnbounded = std::numeric_limits<double>::infinity();

struct LinTerm {
  int var;
  double coef;
};

struct LinExpr {
  std::vector<LinTerm> terms;
  double constant = 0.0;

  LinExpr() = default;
  LinExpr(double c) : constant(c) {}
  static LinExpr of(int var, double coef = 1.0) {
    LinExpr e;
    e.terms.push_back({var, coef});
    return e;
  }
  LinExpr& add(int var, double coef) {
    terms.push_back({var, coef});
    return *this;
  }
  LinExpr& operator+=(const LinExpr& o) {
    terms.insert(terms.end(), o.terms.begin(), o.terms.end());
    constant += o.constant;
    return *this;
  }
  LinExpr& operator-=(const LinExpr& o) {
    for (const LinTerm& t : o.terms) terms.push_back({t.var, -t.coef});
    constant -= o.constant;
    return *this;
  }
  LinExpr& operator*=(double a) {
    for (LinTerm& t : terms) t.coef *= a;
    constant *= a;
    return *this;
  }
};

struct BinaryVar {
  int var;
  int branch_class;  // lower classes branched first
};

struct BoundOverride {
  double lb, ub;
};

class Model {
 public:
  int add_var(const std::string& name, double lb = -kUnbounded, double ub = kUnbounded);
  int add_binary(const std::string& name, int branch_class);
  void set_bounds(int var, double lb, double ub);
  void fix(int var, double value) { set_bounds(var, value, value); }

  void add_eq(const LinExpr& e);   // e == 0
  void add_le(const LinExpr& e);   // e <= 0
  // ||v||_2 <= t
  void add_soc(const LinExpr& t, const std::vector<LinExpr>& v);
  // 2 u w >= ||v||^2, u >= 0, w >= 0
  void add_rotated(const LinExpr& u, const LinExpr& w, const std::vector<LinExpr>& v);
  void minimize(const LinExpr& obj);

  int num_vars() const { return static_cast<int>(names_.size()); }
  const std::string& name(int var) const { return names_[var]; }
  const std::vector<BinaryVar>& binaries() const { return binaries_; }

  struct Result {
    SolveStatus status = SolveStatus::NumericalError;
    std::vector<double> values;
    double objective = 0.0;
    int iterations = 0;
  };

  // Continuous relaxation, with optional per-variable bound overrides
  // (used by branch-and-bound to fix binaries).
  Result solve(const SocpSettings& settings = {},
               const std::map<int, BoundOverride>& overrides = {}) const;

 private:
  SocpProblem lower(const std::map<int, BoundOverride>& overrides) const;

  std::vector<std::string> names_;
  std::vector<double> lb_, ub_;
  std::vector<BinaryVar> binaries_;
  std::vector<LinExpr> eqs_, les_;
  struct SocRow {
    LinExpr t;
    std::vector<LinExpr> v;
  };
  std::vector<SocRow> socs_;
  LinExpr objective_;
};

struct MipSettings {
  double rel_gap = 1e-3;
  double abs_gap = 1e-6;
  double int_tol = 1e-6;
  int max_nodes = 20000;
  double time_limit_s = kUnbounded;
  SocpSettings socp;
};

struct MipResult {
  SolveStatus status = SolveStatus::NumericalError;
  std::vector<double> values;
  double objective = 0.0;
  double best_bound = -kUnbounded;
  int nodes_explored = 0;
  bool hit_limit = false;
};

// Best-first branch-and-bound over the relaxed binaries.  Branch
// variable selection: lowest branch class first, most fractional within
// the class.  A root rounding heuristic seeds the incumbent.
MipResult solve_misocp(const Model& m, const MipSettings& settings = {});

}  // namespace gridstor::conic
