#include "gridstor/storage_model.hpp"

#include <cmath>

namespace gridstor {

void BessRating::validate() const {
  auto bad = [](const std::string& m) { throw ValidationError("rating: " + m); };
  if (e_rate_kwh < 0 || p_rate_kw < 0 || q_rate_kvar < 0 || s_pcs_kva < 0)
    bad("capacities must be non-negative");
  if (!(soc_min >= 0 && soc_min < soc_max && soc_max <= 1.0))
    bad("need 0 <= soc_min < soc_max <= 1");
  if (soc0 < soc_min || soc0 > soc_max) bad("soc0 outside [soc_min, soc_max]");
  for (double eta : {eta_c, eta_d, eta_pcs})
    if (!(eta > 0 && eta <= 1.0)) bad("efficiencies must be in (0,1]");
  if (self_discharge < 0 || self_discharge >= 1) bad("self-discharge outside [0,1)");
  if (n_cess < 1) bad("n_cess must be >= 1");
}

double soc_step(double soc_prev, const BessSetpoint& sp, const BessRating& r, double dt_h) {
  if (r.e_rate_kwh <= 0) throw ValidationError("soc_step: zero-capacity device");
  return soc_prev * (1.0 - r.self_discharge) -
         sp.p_ch_kw * r.eta_c * r.eta_pcs * dt_h / r.e_rate_kwh -
         sp.p_dis_kw * dt_h / (r.e_rate_kwh * r.eta_d * r.eta_pcs);
}

bool pcs_feasible(const BessSetpoint& sp, const BessRating& r) {
  double p = sp.p_dis_kw + sp.p_ch_kw;
  if (std::abs(sp.q_kvar) > r.q_rate_kvar + 1e-9) return false;
  return std::hypot(p, sp.q_kvar) <= r.s_pcs_kva + 1e-9;
}

double mess_min_soc(int t, const std::array<double, kHoursPerDay>& load_p_kw,
                    const BessRating& r, double mu_impor, double dt_h) {
  if (r.e_rate_kwh <= 0) throw ValidationError("mess_min_soc: zero-capacity device");
  double two_hours = load_p_kw[t % kHoursPerDay] + load_p_kw[(t + 1) % kHoursPerDay];
  return mu_impor * two_hours * dt_h / (r.e_rate_kwh * r.eta_d * r.eta_pcs);
}

std::vector<SocViolation> check_trajectory(const SocTrajectory& traj, const BessRating& r,
                                           const std::vector<double>& floors, double tol) {
  std::vector<SocViolation> out;
  const auto& s = traj.soc;
  if (s.empty()) return out;
  for (size_t t = 0; t < s.size(); ++t) {
    double floor = r.soc_min;
    if (t < floors.size()) floor = std::max(floor, floors[t]);
    if (s[t] < floor - tol)
      out.push_back({SocViolation::BelowFloor, static_cast<int>(t), s[t], floor});
    if (s[t] > r.soc_max + tol)
      out.push_back({SocViolation::AboveCeiling, static_cast<int>(t), s[t], r.soc_max});
  }
  if (std::abs(s.back() - s.front()) > tol)
    out.push_back({SocViolation::Periodicity, static_cast<int>(s.size() - 1), s.back(),
                   s.front()});
  return out;
}

}  // namespace gridstor
