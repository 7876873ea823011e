#pragma once

// Primal-dual interior-point solver for second-order cone programs in
// the standard conic form
//
//   min c'x  s.t.  Ax = b,  Gx + s = h,  s in K
//
// where K is a product of a nonnegative orthant (first n_lin rows of G)
// and second-order cones of the listed dimensions.  Uses the homogeneous
// self-dual embedding with Nesterov-Todd scaling and a Mehrotra
// predictor-corrector, so infeasible and unbounded problems are
// certified rather than diverging.

#include <Eigen/Sparse>
#include <vector>

namespace gridstor::conic {

struct SocpProblem {
  Eigen::VectorXd c;
  Eigen::SparseMatrix<double> A;
  Eigen::VectorXd b;
  Eigen::SparseMatrix<double> G;
  Eigen::VectorXd h;
  int n_lin = 0;                // leading rows of G in the orthant
  std::vector<int> soc_dims;    // dimensions of trailing SOC blocks
};

enum class SolveStatus {
  Optimal,
  PrimalInfeasible,
  DualInfeasible,  // primal unbounded
  MaxIterations,
  NumericalError,
};

struct SocpSettings {
  int max_iters = 100;
  double feas_tol = 1e-8;
  double abs_gap_tol = 1e-8;
  double rel_gap_tol = 1e-8;
  // fallback acceptance when progress stalls at the regularization floor
  double feas_tol_reduced = 1e-6;
  double abs_gap_tol_reduced = 5e-5;
  double rel_gap_tol_reduced = 2e-4;
  double static_reg = 1e-8;
  double step_fraction = 0.99;
};

struct SocpSolution {
  SolveStatus status = SolveStatus::NumericalError;
  Eigen::VectorXd x, y, z, s;
  double objective = 0.0;
  double primal_res = 0.0;
  double dual_res = 0.0;
  double gap = 0.0;
  int iterations = 0;
};

SocpSolution solve_socp(const SocpProblem& p, const SocpSettings& settings = {});

}  // namespace gridstor::conic
