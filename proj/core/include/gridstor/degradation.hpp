#pragma once

// Battery life accounting: rainflow cycle extraction from the SOC
// trajectory, a cheap linear daily-damage estimate used inside the
// dispatch objective, and the full temperature-dependent calendar plus
// cycle fade used for lifetime costing.

#include <vector>

#include "gridstor/net_model.hpp"

namespace gridstor {

struct DegradationParams {
  double k1 = 6.81e-5;
  double k2 = 4.02e-5;
  double k3 = 3.01e-5;
  double k4 = 8.98e-6;
  double k5 = 6.298e3;
  double k6 = 1.214e10;
  double k7 = -4.665e3;
  double k8 = 1.675e-6;
  double lin_idle_slope = 1.952e-5;
  double lin_idle_icept = 1.85e-5;
  double lin_cycle_slope = 4.9e-5;
  double lin_cycle_icept = 1.012e-20;
  double eol_fade = 0.2;  // end of life at 20% capacity loss
};

struct CycleRecord {
  double dod = 0.0;     // depth of discharge, fraction
  double t_avg_k = 0.0; // mean container temperature over the cycle span
  bool full = false;    // full cycle vs half cycle
  double weight() const { return full ? 1.0 : 0.5; }
};

// Three-point rainflow over the turning points of the SOC series; the
// residual is emitted as half cycles.  Temperature series must align
// with the SOC samples.
std::vector<CycleRecord> rainflow(const std::vector<double>& soc_series,
                                  const std::vector<double>& temp_series_k);

// Linear daily damage used in the dispatch objective.
double linear_daily_damage(double soc_avg, const std::vector<double>& dods,
                           const DegradationParams& p = {});

// Temperature branch of the full fade model.  Domain [273, 333] K; both
// very cold and very hot operation accelerate aging.
double f_temperature(double t_avg_k, const DegradationParams& p = {});

// Full daily fade: calendar term plus per-cycle DOD x temperature terms.
double daily_degradation(double soc_avg, const std::vector<CycleRecord>& cycles,
                         const DegradationParams& p = {});

// Years until the fade threshold, capped at cap_years for zero damage.
double lifetime_years(double annual_damage, const DegradationParams& p = {},
                      double cap_years = 100.0);

}  // namespace gridstor
