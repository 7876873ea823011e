#pragma once

// Container thermal model: cell heat generation, battery/air exchange,
// container heat balance with HVAC and natural ventilation.  The same
// per-step energy coefficients drive both the hourly simulation and the
// linear rows emitted into the dispatch optimization, so the two cannot
// drift apart.

#include <array>

#include "gridstor/net_model.hpp"
#include "gridstor/storage_model.hpp"

namespace gridstor {

struct ThermalParams {
  double r_int_bat_ohm = 0.003;
  int n_bar = 2760;       // cells per container
  int n_par = 12;         // parallel branches per container
  double u_bar_kv = 0.851;
  double a_bar_m2 = 0.0418;
  double h_trans = 5.0;   // W/m^2 K
  double c_spe_bat = 956.0;   // J/kg K
  double m_bat_kg = 1.7;
  double c_spe_air = 1.003;   // kJ/kg K
  double m_air_kg = 107.4;
  double cop = 3.25;
  double eer = 3.34;
  double rho_air = 1.248;     // kg/m^3
  double k_wall = 0.6;        // W/m^2 K
  double a_wall_m2 = 114.46;
  double a_vent_m2 = 0.5;
  double c_flo_sqrt_c_wind = 0.29;
  double entropic_v = 0.0116;  // T * dU/dT, volts per cell
  double t_cess_min_k = 288.15;
  double t_cess_max_k = 303.15;
  double p_air_max_kw = 10.0;

  void validate() const;
};

struct ThermalState {
  double t_cess_k = 293.15;
  double t_bar_k = 293.15;
};

struct HvacAction {
  double p_hot_kw = 0.0;
  double p_cool_kw = 0.0;
  bool x_air = false;   // heat mode
  bool x_vent = false;  // vent open
};

// Per-step energy coefficients, all in kWh/K over one step of dt hours.
// The container air balance in these terms is
//   m_air*(Tc(t)-Tc(t-1)) = COP*Ph*dt - EER*Pc*dt
//     + a_rel*(Tbar(t)-Tc(t)) + k_vent*(Text-Tc(t))*Xv
//     + a_wall*(Text-Tc(t)) - a_abs*(Tc(t)-Tbar(t-1))
// and generated heat splits as E_gen = (a_rel+a_abs)*(Tbar(t)-Tc(t)).
struct ThermalCoeffs {
  double m_air = 0.0;   // air thermal mass
  double a_rel = 0.0;   // battery surface -> air
  double a_abs = 0.0;   // battery self-absorption
  double a_wall = 0.0;  // wall exchange
  double dt_h = 1.0;

  double k_vent(double v_wind_ms, const ThermalParams& tp) const;
};

ThermalCoeffs thermal_coeffs(const ThermalParams& tp, double dt_h = 1.0);

// Volume flow rate through the open vent (m^3/s).
double vent_flow_m3s(double v_wind_ms, const ThermalParams& tp);

// Single-cell current (A).  p_ch <= 0, p_dis >= 0, in kW at the PCS.
double cell_current(double p_ch_kw, double p_dis_kw, const BessRating& r,
                    const ThermalParams& tp);

// Container heat output at normal operation (kW); even in the current.
double heat_generation(double i_bat_a, const ThermalParams& tp);

// Advances the container one step.  No clamping to the temperature band:
// feasibility checking is the optimizer's job, the simulation reports
// what the physics does.
ThermalState balance_step(const ThermalState& prev, const HvacAction& hvac, double q_gen_kw,
                          double t_ext_k, double v_wind_ms, const ThermalParams& tp,
                          double dt_h = 1.0);

// Residual of the air balance for a claimed transition (kWh); used by
// tests and the dispatch audit, exact solutions give ~1e-16.
double balance_residual_kwh(const ThermalState& prev, const ThermalState& next,
                            const HvacAction& hvac, double q_gen_kw, double t_ext_k,
                            double v_wind_ms, const ThermalParams& tp, double dt_h = 1.0);

}  // namespace gridstor
