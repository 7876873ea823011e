#include "gridstor/conic/socp.hpp"

#include <Eigen/SparseCholesky>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>

namespace gridstor::conic {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Layout {
  int n_lin = 0;
  std::vector<int> soc_dims;
  int total = 0;
  int degree = 0;  // barrier degree: one per linear row, one per cone

  std::vector<int> soc_offsets;
  explicit Layout(const SocpProblem& p) : n_lin(p.n_lin), soc_dims(p.soc_dims) {
    total = n_lin;
    for (int d : soc_dims) {
      soc_offsets.push_back(total);
      total += d;
    }
    degree = n_lin + static_cast<int>(soc_dims.size());
  }
};

// Nesterov-Todd scaling.  For the orthant W is diagonal; for each SOC
// block W^2 = eta^2 (2 wbar wbar' - J) with J = diag(1, -I), and W
// itself has the closed form below because wbar'J wbar = 1.
struct Scaling {
  VectorXd w2_lin;             // s_i / z_i
  std::vector<MatrixXd> soc_w, soc_winv, soc_w2;
  VectorXd lambda;             // scaled point, full length
};

bool compute_scaling(const Layout& lay, const VectorXd& s, const VectorXd& z, Scaling& sc) {
  sc.w2_lin.resize(lay.n_lin);
  sc.lambda.resize(lay.total);
  sc.soc_w.clear();
  sc.soc_winv.clear();
  sc.soc_w2.clear();
  for (int i = 0; i < lay.n_lin; ++i) {
    if (s[i] <= 0 || z[i] <= 0) return false;
    sc.w2_lin[i] = s[i] / z[i];
    sc.lambda[i] = std::sqrt(s[i] * z[i]);
  }
  for (size_t k = 0; k < lay.soc_dims.size(); ++k) {
    int d = lay.soc_dims[k], off = lay.soc_offsets[k];
    VectorXd sk = s.segment(off, d), zk = z.segment(off, d);
    double sres = sk[0] * sk[0] - sk.tail(d - 1).squaredNorm();
    double zres = zk[0] * zk[0] - zk.tail(d - 1).squaredNorm();
    if (sres <= 0 || zres <= 0 || sk[0] <= 0 || zk[0] <= 0) return false;
    VectorXd sb = sk / std::sqrt(sres), zb = zk / std::sqrt(zres);
    double gamma = std::sqrt((1.0 + sb.dot(zb)) / 2.0);
    VectorXd jz = zb;
    jz.tail(d - 1) *= -1.0;
    VectorXd wb = (sb + jz) / (2.0 * gamma);
    double eta = std::pow(sres / zres, 0.25);

    MatrixXd w(d, d), winv(d, d);
    double w0 = wb[0];
    VectorXd w1 = wb.tail(d - 1);
    w(0, 0) = w0;
    w.block(0, 1, 1, d - 1) = w1.transpose();
    w.block(1, 0, d - 1, 1) = w1;
    w.block(1, 1, d - 1, d - 1) =
        MatrixXd::Identity(d - 1, d - 1) + w1 * w1.transpose() / (1.0 + w0);
    winv = w;
    winv.block(0, 1, 1, d - 1) *= -1.0;
    winv.block(1, 0, d - 1, 1) *= -1.0;
    w *= eta;
    winv /= eta;
    sc.soc_w.push_back(w);
    sc.soc_winv.push_back(winv);
    sc.soc_w2.push_back(w * w);
    sc.lambda.segment(off, d) = w * zk;
  }
  return true;
}

// v := W u or W^{-1} u across the whole cone.
VectorXd apply_w(const Layout& lay, const Scaling& sc, const VectorXd& u, bool inverse) {
  VectorXd v(lay.total);
  for (int i = 0; i < lay.n_lin; ++i) {
    double w = std::sqrt(sc.w2_lin[i]);
    v[i] = inverse ? u[i] / w : u[i] * w;
  }
  for (size_t k = 0; k < lay.soc_dims.size(); ++k) {
    int d = lay.soc_dims[k], off = lay.soc_offsets[k];
    const MatrixXd& m = inverse ? sc.soc_winv[k] : sc.soc_w[k];
    v.segment(off, d) = m * u.segment(off, d);
  }
  return v;
}

// Jordan product u o v.
VectorXd cone_prod(const Layout& lay, const VectorXd& u, const VectorXd& v) {
  VectorXd out(lay.total);
  for (int i = 0; i < lay.n_lin; ++i) out[i] = u[i] * v[i];
  for (size_t k = 0; k < lay.soc_dims.size(); ++k) {
    int d = lay.soc_dims[k], off = lay.soc_offsets[k];
    auto uk = u.segment(off, d);
    auto vk = v.segment(off, d);
    out[off] = uk.dot(vk);
    out.segment(off + 1, d - 1) = uk[0] * vk.tail(d - 1) + vk[0] * uk.tail(d - 1);
  }
  return out;
}

// Solve lambda o x = d.
VectorXd cone_div(const Layout& lay, const VectorXd& lambda, const VectorXd& d) {
  VectorXd x(lay.total);
  for (int i = 0; i < lay.n_lin; ++i) x[i] = d[i] / lambda[i];
  for (size_t k = 0; k < lay.soc_dims.size(); ++k) {
    int dim = lay.soc_dims[k], off = lay.soc_offsets[k];
    auto lk = lambda.segment(off, dim);
    auto dk = d.segment(off, dim);
    double det = lk[0] * lk[0] - lk.tail(dim - 1).squaredNorm();
    double x0 = (lk[0] * dk[0] - lk.tail(dim - 1).dot(dk.tail(dim - 1))) / det;
    x[off] = x0;
    x.segment(off + 1, dim - 1) = (dk.tail(dim - 1) - x0 * lk.tail(dim - 1)) / lk[0];
  }
  return x;
}

VectorXd cone_identity(const Layout& lay) {
  VectorXd e = VectorXd::Zero(lay.total);
  for (int i = 0; i < lay.n_lin; ++i) e[i] = 1.0;
  for (size_t k = 0; k < lay.soc_dims.size(); ++k) e[lay.soc_offsets[k]] = 1.0;
  return e;
}

void bring_to_cone(const Layout& lay, VectorXd& u) {
  for (int i = 0; i < lay.n_lin; ++i)
    if (u[i] <= 0) u[i] = 1.0;
  // shift each SOC block along its axis until strictly interior
  for (size_t k = 0; k < lay.soc_dims.size(); ++k) {
    int d = lay.soc_dims[k], off = lay.soc_offsets[k];
    double alpha = u.segment(off + 1, d - 1).norm() - u[off];
    if (alpha >= 0) u[off] += 1.0 + alpha;
  }
}

// Largest step alpha such that u + alpha du stays in the cone.
double max_step(const Layout& lay, const VectorXd& u, const VectorXd& du) {
  double alpha = kInf;
  for (int i = 0; i < lay.n_lin; ++i)
    if (du[i] < 0) alpha = std::min(alpha, -u[i] / du[i]);
  for (size_t k = 0; k < lay.soc_dims.size(); ++k) {
    int d = lay.soc_dims[k], off = lay.soc_offsets[k];
    double u0 = u[off], d0 = du[off];
    auto u1 = u.segment(off + 1, d - 1);
    auto d1 = du.segment(off + 1, d - 1);
    // boundary where (u0+a d0)^2 - |u1+a d1|^2 = 0 with u0+a d0 >= 0
    double qa = d0 * d0 - d1.squaredNorm();
    double qb = 2.0 * (u0 * d0 - u1.dot(d1));
    double qc = u0 * u0 - u1.squaredNorm();
    double lim = kInf;
    double disc = qb * qb - 4.0 * qa * qc;
    if (std::abs(qa) < 1e-14) {
      if (qb < 0) lim = -qc / qb;
    } else if (disc >= 0) {
      double sq = std::sqrt(disc);
      double r1 = (-qb - sq) / (2.0 * qa), r2 = (-qb + sq) / (2.0 * qa);
      if (r1 > r2) std::swap(r1, r2);
      if (r1 > 0) lim = r1;
      else if (r2 > 0 && (qa < 0 || qb < 0)) lim = r2;
    }
    if (d0 < 0) lim = std::min(lim, -u0 / d0);
    if (lim < alpha) alpha = lim;
  }
  return alpha;
}

struct Kkt {
  // K = [ dI  A'  G' ; A  -dI  0 ; G  0  -(W^2+dI) ]
  int n, p, m;
  double reg;
  std::vector<Eigen::Triplet<double>> fixed;  // everything except W^2
  Eigen::SimplicialLDLT<SpMat> ldlt;
  SpMat k;
  VectorXd sign;  // +1 on x block, -1 elsewhere (for refinement)
  bool analyzed = false;

  Kkt(const SocpProblem& pb, double reg_) : n(pb.c.size()), p(pb.b.size()), m(pb.h.size()),
                                            reg(reg_) {
    for (int i = 0; i < n; ++i) fixed.emplace_back(i, i, reg);
    for (int i = 0; i < p; ++i) fixed.emplace_back(n + i, n + i, -reg);
    for (int k2 = 0; k2 < pb.A.outerSize(); ++k2)
      for (SpMat::InnerIterator it(pb.A, k2); it; ++it) {
        fixed.emplace_back(n + it.row(), it.col(), it.value());
        fixed.emplace_back(it.col(), n + it.row(), it.value());
      }
    for (int k2 = 0; k2 < pb.G.outerSize(); ++k2)
      for (SpMat::InnerIterator it(pb.G, k2); it; ++it) {
        fixed.emplace_back(n + p + it.row(), it.col(), it.value());
        fixed.emplace_back(it.col(), n + p + it.row(), it.value());
      }
    sign = VectorXd::Ones(n + p + m);
    sign.tail(p + m) *= -1.0;
  }

  bool factor(const Layout& lay, const Scaling& sc) {
    std::vector<Eigen::Triplet<double>> tr = fixed;
    int base = n + p;
    for (int i = 0; i < lay.n_lin; ++i)
      tr.emplace_back(base + i, base + i, -(sc.w2_lin[i] + reg));
    for (size_t c = 0; c < lay.soc_dims.size(); ++c) {
      int d = lay.soc_dims[c], off = base + lay.soc_offsets[c];
      const MatrixXd& w2 = sc.soc_w2[c];
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
          tr.emplace_back(off + i, off + j, -(w2(i, j) + (i == j ? reg : 0.0)));
    }
    k.resize(n + p + m, n + p + m);
    k.setFromTriplets(tr.begin(), tr.end());
    if (!analyzed) {
      ldlt.analyzePattern(k);
      analyzed = true;
    }
    ldlt.factorize(k);
    return ldlt.info() == Eigen::Success;
  }

  // Solves against the unregularized matrix via iterative refinement.
  VectorXd solve(const VectorXd& rhs) const {
    VectorXd x = ldlt.solve(rhs);
    for (int it = 0; it < 2; ++it) {
      VectorXd res = rhs - k * x + reg * sign.cwiseProduct(x);
      x += ldlt.solve(res);
    }
    return x;
  }
};

}  // namespace

static SocpSolution solve_socp_once(const SocpProblem& p, const SocpSettings& st) {
  SocpSolution sol;
  const int n = static_cast<int>(p.c.size());
  const int pe = static_cast<int>(p.b.size());
  const int m = static_cast<int>(p.h.size());
  Layout lay(p);
  if (lay.total != m) return sol;  // malformed cone layout

  if (m == 0) {
    // equality-constrained LP degenerates; not needed by callers
    return sol;
  }

  Kkt kkt(p, st.static_reg);
  Scaling sc;
  sc.w2_lin = VectorXd::Ones(lay.n_lin);
  sc.lambda = VectorXd::Zero(lay.total);
  for (int d : lay.soc_dims) sc.soc_w2.push_back(MatrixXd::Identity(d, d));
  if (!kkt.factor(lay, sc)) return sol;

  // initial point from two least-squares style solves with W = I
  VectorXd rhs1 = VectorXd::Zero(n + pe + m);
  rhs1.segment(n, pe) = p.b;
  rhs1.tail(m) = p.h;
  VectorXd v1 = kkt.solve(rhs1);
  VectorXd x = v1.head(n);
  VectorXd s = -(v1.tail(m));  // = h - Gx at the solve
  bring_to_cone(lay, s);

  VectorXd rhs2 = VectorXd::Zero(n + pe + m);
  rhs2.head(n) = -p.c;
  VectorXd v2 = kkt.solve(rhs2);
  VectorXd y = v2.segment(n, pe);
  VectorXd z = v2.tail(m);
  bring_to_cone(lay, z);

  double tau = 1.0, kappa = 1.0;
  double norm_b = std::max(1.0, p.b.norm());
  double norm_h = std::max(1.0, p.h.norm());
  double norm_c = std::max(1.0, p.c.norm());

  // stall handling: near the regularization floor iterates stop
  // improving and may even degrade; remember the best iterate seen and
  // accept it at reduced tolerances instead of reporting a numerical
  // failure
  double prev_gap = kInf;
  int stall = 0;
  VectorXd x_best = x, y_best = y, z_best = z, s_best = s;
  double tau_best = tau;
  double best_pres = kInf, best_dres = kInf, best_absgap = kInf, best_relgap = kInf,
         best_pcost = 0.0, best_merit = kInf;
  auto accept = [&]() {
    if (best_pres > st.feas_tol_reduced || best_dres > st.feas_tol_reduced) return false;
    if (best_absgap > st.abs_gap_tol_reduced && best_relgap > st.rel_gap_tol_reduced)
      return false;
    sol.status = SolveStatus::Optimal;
    sol.x = x_best / tau_best;
    sol.y = y_best / tau_best;
    sol.z = z_best / tau_best;
    sol.s = s_best / tau_best;
    sol.primal_res = best_pres;
    sol.dual_res = best_dres;
    sol.gap = best_absgap;
    sol.objective = best_pcost;
    return true;
  };

  for (int iter = 0; iter < st.max_iters; ++iter) {
    VectorXd rx = -(p.A.transpose() * y) - p.G.transpose() * z - p.c * tau;
    VectorXd ry = p.A * x - p.b * tau;
    VectorXd rz = s + p.G * x - p.h * tau;
    double rtau = kappa + p.c.dot(x) + p.b.dot(y) + p.h.dot(z);

    double gap = s.dot(z);
    double pcost = p.c.dot(x) / tau;
    double relgap = gap / (tau * tau) / std::max(1.0, std::abs(pcost));
    // the attainable absolute gap floors at roughly ||c|| times the
    // regularization, so judge it relative to the objective scale
    double absgap = gap / (tau * tau) / norm_c;
    double pres = std::max(ry.norm() / norm_b, rz.norm() / norm_h) / tau;
    double dres = rx.norm() / norm_c / tau;
    sol.primal_res = pres;
    sol.dual_res = dres;
    sol.gap = gap / (tau * tau);
    sol.iterations = iter;
    if (std::getenv("GRIDSTOR_SOCP_TRACE"))
      std::fprintf(stderr, "it %3d pres %.3e dres %.3e gap %.3e tau %.3e kap %.3e\n", iter,
                   pres, dres, gap / (tau * tau), tau, kappa);

    if (pres <= st.feas_tol && dres <= st.feas_tol &&
        (absgap <= st.abs_gap_tol || relgap <= st.rel_gap_tol)) {
      sol.status = SolveStatus::Optimal;
      sol.x = x / tau;
      sol.y = y / tau;
      sol.z = z / tau;
      sol.s = s / tau;
      sol.objective = pcost;
      return sol;
    }
    double merit = std::max({pres, dres, std::min(absgap, relgap)});
    if (merit < best_merit) {
      best_merit = merit;
      x_best = x;
      y_best = y;
      z_best = z;
      s_best = s;
      tau_best = tau;
      best_pres = pres;
      best_dres = dres;
      best_absgap = absgap;
      best_relgap = relgap;
      best_pcost = pcost;
    }
    if (gap / (tau * tau) > 0.9 * prev_gap) {
      if (++stall >= 4 && accept()) return sol;
    } else {
      stall = 0;
    }
    prev_gap = gap / (tau * tau);
    // infeasibility certificates
    double by_hz = p.b.dot(y) + p.h.dot(z);
    if (by_hz < -1e-12) {
      double pinfres = (p.A.transpose() * y + p.G.transpose() * z).norm() / (-by_hz) / norm_c;
      if (pinfres <= st.feas_tol) {
        sol.status = SolveStatus::PrimalInfeasible;
        sol.y = y / (-by_hz);
        sol.z = z / (-by_hz);
        return sol;
      }
    }
    double cx = p.c.dot(x);
    if (cx < -1e-12) {
      double dinfres = std::max((p.A * x).norm() / norm_b, (p.G * x + s).norm() / norm_h) / (-cx);
      if (dinfres <= st.feas_tol) {
        sol.status = SolveStatus::DualInfeasible;
        sol.x = x / (-cx);
        sol.s = s / (-cx);
        return sol;
      }
    }

    if (!compute_scaling(lay, s, z, sc)) {
      if (!accept()) sol.status = SolveStatus::NumericalError;
      return sol;
    }
    if (!kkt.factor(lay, sc)) {
      if (!accept()) sol.status = SolveStatus::NumericalError;
      return sol;
    }
    double mu = (gap + tau * kappa) / (lay.degree + 1);

    // constant solve reused by both directions
    VectorXd rc = VectorXd::Zero(n + pe + m);
    rc.head(n) = -p.c;
    rc.segment(n, pe) = p.b;
    rc.tail(m) = p.h;
    VectorXd v_1 = kkt.solve(rc);
    VectorXd x1 = v_1.head(n), y1 = v_1.segment(n, pe), z1 = v_1.tail(m);
    double denom = kappa / tau - (p.c.dot(x1) + p.b.dot(y1) + p.h.dot(z1));

    auto direction = [&](double sigma, const VectorXd& ds_extra, double dk_extra, VectorXd& dx,
                         VectorXd& dy, VectorXd& dz, VectorXd& dsv, double& dtau, double& dkap) {
      double one_m = 1.0 - sigma;
      VectorXd ds = -cone_prod(lay, sc.lambda, sc.lambda) + ds_extra +
                    sigma * mu * cone_identity(lay);
      double dk = -tau * kappa + dk_extra + sigma * mu;
      VectorXd wl = apply_w(lay, sc, cone_div(lay, sc.lambda, ds), false);
      VectorXd r2 = VectorXd::Zero(n + pe + m);
      r2.head(n) = one_m * rx;
      r2.segment(n, pe) = -one_m * ry;
      r2.tail(m) = -one_m * rz - wl;
      VectorXd v = kkt.solve(r2);
      VectorXd x2 = v.head(n), y2 = v.segment(n, pe), z2 = v.tail(m);
      double btau = one_m * rtau;
      dtau = (btau + p.c.dot(x2) + p.b.dot(y2) + p.h.dot(z2) + dk / tau) / denom;
      dx = x2 + dtau * x1;
      dy = y2 + dtau * y1;
      dz = z2 + dtau * z1;
      // ds = W(lambda \ ds_rhs) - W^2 dz
      VectorXd w2dz(lay.total);
      for (int i = 0; i < lay.n_lin; ++i) w2dz[i] = sc.w2_lin[i] * dz[i];
      for (size_t ck = 0; ck < lay.soc_dims.size(); ++ck) {
        int d = lay.soc_dims[ck], off = lay.soc_offsets[ck];
        w2dz.segment(off, d) = sc.soc_w2[ck] * dz.segment(off, d);
      }
      dsv = wl - w2dz;
      dkap = (dk - kappa * dtau) / tau;
    };

    VectorXd dxa, dya, dza, dsa;
    double dta, dka;
    direction(0.0, VectorXd::Zero(lay.total), 0.0, dxa, dya, dza, dsa, dta, dka);

    double a_aff = std::min(1.0, max_step(lay, s, dsa));
    a_aff = std::min(a_aff, max_step(lay, z, dza));
    if (dta < 0) a_aff = std::min(a_aff, -tau / dta);
    if (dka < 0) a_aff = std::min(a_aff, -kappa / dka);
    double sigma = std::pow(1.0 - a_aff, 3);
    sigma = std::min(1.0, std::max(0.0, sigma));

    VectorXd ds_extra =
        -cone_prod(lay, apply_w(lay, sc, dsa, true), apply_w(lay, sc, dza, false));
    double dk_extra = -dta * dka;
    VectorXd dx, dy, dz, dsv;
    double dtau, dkap;
    direction(sigma, ds_extra, dk_extra, dx, dy, dz, dsv, dtau, dkap);

    double a = st.step_fraction * std::min(max_step(lay, s, dsv), max_step(lay, z, dz));
    if (dtau < 0) a = std::min(a, -st.step_fraction * tau / dtau);
    if (dkap < 0) a = std::min(a, -st.step_fraction * kappa / dkap);
    a = std::min(a, 1.0);
    if (!(a > 0) || !std::isfinite(a)) {
      if (!accept()) sol.status = SolveStatus::NumericalError;
      return sol;
    }

    x += a * dx;
    y += a * dy;
    z += a * dz;
    s += a * dsv;
    tau += a * dtau;
    kappa += a * dkap;
  }

  if (accept()) return sol;
  sol.status = SolveStatus::MaxIterations;
  sol.x = x / tau;
  sol.y = y / tau;
  sol.z = z / tau;
  sol.s = s / tau;
  sol.objective = p.c.dot(sol.x);
  return sol;
}

SocpSolution solve_socp(const SocpProblem& p, const SocpSettings& st) {
  // the right regularization is instance-dependent: too little and the
  // KKT factorization collapses near convergence, too much and the
  // refinement cannot recover the true solution.  Escalate only when a
  // solve dies numerically.
  SocpSettings attempt = st;
  SocpSolution sol;
  for (int k = 0; k < 3; ++k) {
    sol = solve_socp_once(p, attempt);
    if (sol.status != SolveStatus::NumericalError) return sol;
    attempt.static_reg *= 10.0;
  }
  return sol;
}

}  // namespace gridstor::conic
