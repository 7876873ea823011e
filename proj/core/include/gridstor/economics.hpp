#pragma once

// Monetary flows: annualized life-cycle cost of stationary storage,
// mobile-unit rent and life-damage compensation, arbitrage and
// loss-reduction benefits, and the two outer-objective assemblies.

#include <array>
#include <map>
#include <vector>

#include "gridstor/net_model.hpp"
#include "gridstor/storage_model.hpp"

namespace gridstor {

struct EconParams {
  double c_e = 156.0;      // $/kWh storage capacity
  double c_p = 10.0;       // $/kW PCS
  double c_b = 0.0;        // $/kWh supporting facilities
  double c_f = 23.8;       // $/kW yr fixed O&M
  double c_d = 243.4;      // $/kW disposal
  double c_rent = 102.6;   // $/module day
  double tau = 0.10;       // discount rate
  int years = 20;          // project cycle Y
  double alpha = 0.0;      // annual capital-cost decline rate
  int pcs_life_years = 10;
  double budget = 1e12;    // $
  double lambda1 = 0.67;
  double lambda2 = 0.33;
  double gap_max = 1e-4;   // relaxation-gap threshold for the penalty branch
  double c_pun = 1e6;      // $ penalty when the cone relaxation is inexact
  int t_rent_days = 60;
  double e_rate_mess_kwh = 1000.0;
  double p_rate_mess_kw = 1000.0;

  void validate() const;
};

struct OperatingCash {
  double c_var = 0.0;
  double b_arb = 0.0;
  double b_loss = 0.0;
  double c_fix = 0.0;
};

struct CostReport {
  double c_cap = 0.0;
  double c_rep = 0.0;
  double c_fix = 0.0;
  double c_var = 0.0;
  double c_dis = 0.0;
  double c_rent = 0.0;
  double b_arb = 0.0;
  double b_loss = 0.0;
  double c_com = 0.0;
  double penalty = 0.0;
  double net() const {
    return c_cap + c_rep + c_fix + c_var + c_dis + c_rent - b_arb - b_loss + penalty;
  }
};

// Capital recovery factor tau*(1+tau)^Y / ((1+tau)^Y - 1); the tau -> 0
// limit 1/Y is taken exactly at tau = 0.
double crf(double tau, int years);

// Annualized capital of a stationary unit.
double annualized_capital(const BessRating& r, const EconParams& p);

struct ReplacementCost {
  double c_rep = 0.0;  // $/yr, battery + PCS replacement
  double c_dis = 0.0;  // $/yr, disposal of replaced batteries
};

// Battery replaced every n years while still inside the project window;
// PCS replaced once at its own life if the project outlives it.  Both
// discounted and annuitized.
ReplacementCost replacement_and_disposal(const BessRating& r, double n_years,
                                         const EconParams& p);

// One day of arbitrage for one device: sum over hours of
// (P_dis + P_ch) * price, P_ch <= 0.  Positive means net revenue.
double arbitrage_day(const std::array<double, kHoursPerDay>& p_net_kw,
                     const std::array<double, kHoursPerDay>& price);

// Rent bill for the whole event: per-module daily rent plus life-damage
// compensation priced at replacement cost over the fade budget.
double mess_rent(const std::vector<int>& n_modules_per_site,
                 const std::vector<double>& zeta_per_module, const EconParams& p);

// Outer objective assemblies.  Stage 1 annualizes the whole life cycle;
// stage 2 bills the event window only.  gap triggers the penalty branch.
double stage1_objective(const CostReport& r);
CostReport assemble_stage1(double c_cap, double c_rep, double c_fix, double c_var, double c_dis,
                           double b_arb, double b_loss, double worst_gap, const EconParams& p);
CostReport assemble_stage2(double c_rent, double c_fix, double c_var, double b_arb,
                           double b_loss, double worst_gap, const EconParams& p);

}  // namespace gridstor
