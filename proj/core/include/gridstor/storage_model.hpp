#pragma once

// Device-level BESS model shared by stationary and mobile units: PCS
// apparent-power envelope, charge/discharge exclusivity, SOC dynamics
// and the important-load reserve floor for mobile units.

#include <array>
#include <string>
#include <vector>

#include "gridstor/net_model.hpp"

namespace gridstor {

struct BessRating {
  double e_rate_kwh = 0.0;
  double p_rate_kw = 0.0;
  double q_rate_kvar = 0.0;
  double s_pcs_kva = 0.0;
  double soc_min = 0.10;
  double soc_max = 0.90;
  double soc0 = 0.50;
  double self_discharge = 0.0;  // per-step fraction
  double eta_c = 0.976;
  double eta_d = 0.976;
  double eta_pcs = 0.95;
  int n_cess = 1;
  int node = 0;
  StorageKind kind = StorageKind::Sess;
  bool colocated = false;

  void validate() const;  // throws ValidationError
};

// Sign convention: P_dis >= 0, P_ch <= 0 (power drawn from the grid),
// exactly one of mu_dis/mu_ch is set per hour.
struct BessSetpoint {
  double p_dis_kw = 0.0;
  double p_ch_kw = 0.0;
  double q_kvar = 0.0;
  bool mu_dis = false;
};

struct SocTrajectory {
  std::vector<double> soc;  // length T+1, soc[0] is the initial state
};

struct SocViolation {
  enum Kind { BelowFloor, AboveCeiling, Periodicity } kind;
  int hour;
  double value;
  double bound;
};

// One SOC transition.  No clamping: bound checking is separate so the
// caller can distinguish "infeasible" from "clipped".
double soc_step(double soc_prev, const BessSetpoint& sp, const BessRating& r,
                double dt_h = 1.0);

bool pcs_feasible(const BessSetpoint& sp, const BessRating& r);

// Reserve floor for a mobile unit backing important load: enough energy
// to carry this hour's and the next hour's important share.  t+1 wraps.
double mess_min_soc(int t, const std::array<double, kHoursPerDay>& load_p_kw,
                    const BessRating& r, double mu_impor, double dt_h = 1.0);

std::vector<SocViolation> check_trajectory(const SocTrajectory& traj, const BessRating& r,
                                           const std::vector<double>& floors,
                                           double tol = 1e-6);

}  // namespace gridstor
