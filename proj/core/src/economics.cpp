#include "gridstor/economics.hpp"

#include <cmath>

namespace gridstor {

void EconParams::validate() const {
  auto bad = [](const std::string& m) { throw ValidationError("econ params: " + m); };
  if (tau < 0) bad("discount rate must be non-negative");
  if (years < 1) bad("project cycle must be at least one year");
  if (std::abs(lambda1 + lambda2 - 1.0) > 1e-9) bad("objective weights must sum to 1");
  if (budget < 0) bad("budget must be non-negative");
  if (alpha < 0 || alpha >= 1) bad("cost-decline rate outside [0,1)");
  if (gap_max <= 0 || c_pun < 0) bad("gap threshold must be positive, penalty non-negative");
  if (t_rent_days < 1 || e_rate_mess_kwh <= 0 || p_rate_mess_kw <= 0)
    bad("rent period and module ratings must be positive");
}

double crf(double tau, int years) {
  if (years < 1) throw ValidationError("crf: years must be >= 1");
  if (tau == 0.0) return 1.0 / years;
  double g = std::pow(1.0 + tau, years);
  return tau * g / (g - 1.0);
}

double annualized_capital(const BessRating& r, const EconParams& p) {
  return (p.c_e * r.e_rate_kwh + p.c_p * r.p_rate_kw + p.c_b * r.e_rate_kwh) *
         crf(p.tau, p.years);
}

ReplacementCost replacement_and_disposal(const BessRating& r, double n_years,
                                         const EconParams& p) {
  if (n_years <= 0) throw ValidationError("replacement: lifetime must be positive");
  ReplacementCost out;
  double a = crf(p.tau, p.years);
  // replacements happen at years n, 2n, ... strictly inside the project
  int k = std::max(0, static_cast<int>(std::ceil(static_cast<double>(p.years) / n_years)) - 1);
  double disc_sum = 0.0;
  for (int eps = 1; eps <= k; ++eps) {
    double yr = eps * n_years;
    disc_sum += std::pow(1.0 - p.alpha, yr) / std::pow(1.0 + p.tau, yr);
  }
  out.c_rep = p.c_e * r.e_rate_kwh * disc_sum * a;
  if (p.years > p.pcs_life_years) {
    double y = p.pcs_life_years;
    out.c_rep += p.c_p * r.p_rate_kw * std::pow(1.0 - p.alpha, y) / std::pow(1.0 + p.tau, y) * a;
  }
  out.c_dis = p.c_d * r.p_rate_kw * disc_sum * a;
  return out;
}

double arbitrage_day(const std::array<double, kHoursPerDay>& p_net_kw,
                     const std::array<double, kHoursPerDay>& price) {
  double b = 0.0;
  for (int t = 0; t < kHoursPerDay; ++t) b += p_net_kw[t] * price[t];
  return b;
}

double mess_rent(const std::vector<int>& n_modules_per_site,
                 const std::vector<double>& zeta_per_module, const EconParams& p) {
  double rent = 0.0;
  for (int n : n_modules_per_site) rent += p.c_rent * n * p.t_rent_days;
  for (double zeta : zeta_per_module)
    rent += p.t_rent_days * (zeta / 0.2) * p.c_e * p.e_rate_mess_kwh;
  return rent;
}

double stage1_objective(const CostReport& r) { return r.net(); }

CostReport assemble_stage1(double c_cap, double c_rep, double c_fix, double c_var, double c_dis,
                           double b_arb, double b_loss, double worst_gap, const EconParams& p) {
  CostReport r;
  r.c_cap = c_cap;
  r.c_rep = c_rep;
  r.c_fix = c_fix;
  r.c_var = c_var;
  r.c_dis = c_dis;
  r.b_arb = b_arb;
  r.b_loss = b_loss;
  r.penalty = (worst_gap >= p.gap_max) ? p.c_pun : 0.0;
  return r;
}

CostReport assemble_stage2(double c_rent, double c_fix, double c_var, double b_arb,
                           double b_loss, double worst_gap, const EconParams& p) {
  CostReport r;
  r.c_rent = c_rent;
  r.c_fix = c_fix;
  r.c_var = c_var;
  r.b_arb = b_arb;
  r.b_loss = b_loss;
  r.penalty = (worst_gap >= p.gap_max) ? p.c_pun : 0.0;
  return r;
}

}  // namespace gridstor
