#pragma once

// Inner-level dispatch: one monolithic 24-hour mixed-integer SOCP per
// scenario.  Branch flows use the branch-flow (DistFlow) equations with
// the conic relaxation of the current-definition row; converters couple
// the AC and DC subsystems with loss proportional to |P|; storage
// devices contribute charge/discharge exclusivity binaries, SOC
// dynamics and container thermal management.

#include <array>
#include <map>
#include <vector>

#include "gridstor/conic/program.hpp"
#include "gridstor/economics.hpp"
#include "gridstor/net_model.hpp"
#include "gridstor/storage_model.hpp"
#include "gridstor/thermal.hpp"

namespace gridstor {

struct StorageDesign {
  int node = 0;
  StorageKind kind = StorageKind::Sess;
  double e_rate_kwh = 0.0;   // per site (SESS); ignored for MESS
  double p_rate_kw = 0.0;
  double soc0 = 0.5;
  bool q_enable = false;
  int n_modules = 0;         // MESS module count
  int n_cess = 1;
  bool colocated = false;

  bool active(const EconParams& p) const;
};

struct DeviceParams {
  double eta_c = 0.976;
  double eta_d = 0.976;
  double eta_pcs = 0.95;
  double soc_min = 0.10;
  double soc_max = 0.90;
  double self_discharge = 0.0;
};

// Expands a design into concrete ratings; MESS sites aggregate
// n_modules fixed modules into one device.
BessRating make_rating(const StorageDesign& d, const DeviceParams& dp, const EconParams& ep);

struct DispatchOptions {
  EconParams econ;
  ThermalParams thermal;
  DeviceParams device;
  conic::MipSettings mip;
  bool with_thermal = true;
  bool penalty_relaxed = false;   // soften voltage/current bounds for violation accounting
  double penalty_per_pu = 1e6;    // $ per p.u. of bound slack
  double slack_import_limit_pu = 1e3;
  bool mess_floors = true;        // apply important-load SOC floors to mobile units
};

struct DeviceDispatch {
  StorageDesign design;
  BessRating rating;
  std::array<double, kHoursPerDay> p_dis_kw{}, p_ch_kw{}, q_kvar{};
  std::array<double, kHoursPerDay> i_bat2_a2{};
  std::array<double, kHoursPerDay + 1> soc{};
  std::array<double, kHoursPerDay> p_hot_kw{}, p_cool_kw{};
  std::array<int, kHoursPerDay> mu_dis{}, x_air{}, x_vent{};
  std::array<double, kHoursPerDay + 1> t_cess_k{}, t_bar_k{};
  std::array<double, kHoursPerDay + 1> soc_floor{};
};

struct BranchFlow {
  int from = 0, to = 0;  // oriented parent -> child
  bool dc = false;
  double r_pu = 0.0, x_pu = 0.0;
  std::array<double, kHoursPerDay> p_pu{}, q_pu{}, i2_pu{};
};

struct VscFlow {
  int ac_bus = 0, dc_bus = 0;
  std::array<double, kHoursPerDay> p_ac_pu{}, q_pu{}, p_abs_pu{};
};

struct DispatchSolution {
  conic::SolveStatus status = conic::SolveStatus::NumericalError;
  double objective = 0.0;   // lambda-weighted inner objective, $ per day
  double c_loss = 0.0;      // network + converter loss cost, $ per day
  double c_var = 0.0;       // HVAC + cell-loss cost, $ per day
  double c_com = 0.0;       // life-damage compensation, $ per day
  double b_arb = 0.0;       // arbitrage revenue, $ per day
  double socr_gap = 0.0;    // worst relaxation deviation, p.u.
  int violations = 0;       // penalty mode: bound breaches counted
  int nodes_explored = 0;
  std::map<int, std::array<double, kHoursPerDay>> v2_pu;
  std::vector<BranchFlow> branches;
  std::vector<VscFlow> vscs;
  std::vector<DeviceDispatch> devices;
};

DispatchSolution solve_dispatch(const HybridNetwork& net, const Scenario& scen,
                                const std::vector<StorageDesign>& designs,
                                const DispatchOptions& opts);

// Same model with every storage device removed; reference for the
// loss-reduction benefit and for violation accounting.
DispatchSolution baseline_dispatch(const HybridNetwork& net, const Scenario& scen,
                                   const DispatchOptions& opts);

// Worst deviation of the relaxed current-definition rows, recomputed
// from the reported flows.
double socr_gap(const DispatchSolution& sol);

}  // namespace gridstor
