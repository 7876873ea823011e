#include "gridstor/degradation.hpp"

#include <cmath>
#include <deque>

namespace gridstor {

namespace {

struct Point {
  double v;
  size_t idx;
};

std::vector<Point> turning_points(const std::vector<double>& s) {
  std::vector<Point> out;
  for (size_t i = 0; i < s.size(); ++i) {
    if (!out.empty() && s[i] == out.back().v) continue;
    while (out.size() >= 2) {
      double a = out[out.size() - 2].v, b = out.back().v;
      // drop b when it is not an extremum between a and s[i]
      if ((b - a) * (s[i] - b) > 0) out.pop_back();
      else break;
    }
    out.push_back({s[i], i});
  }
  return out;
}

double span_mean(const std::vector<double>& temp, size_t i, size_t j) {
  if (temp.empty()) return 0.0;
  if (i > j) std::swap(i, j);
  j = std::min(j, temp.size() - 1);
  double sum = 0;
  for (size_t k = i; k <= j; ++k) sum += temp[k];
  return sum / static_cast<double>(j - i + 1);
}

}  // namespace

std::vector<CycleRecord> rainflow(const std::vector<double>& soc_series,
                                  const std::vector<double>& temp_series_k) {
  std::vector<CycleRecord> out;
  if (soc_series.size() < 2) return out;
  if (!temp_series_k.empty() && temp_series_k.size() != soc_series.size())
    throw ValidationError("rainflow: temperature series must align with SOC series");

  std::deque<Point> st;
  auto emit = [&](const Point& a, const Point& b, bool full) {
    out.push_back({std::abs(a.v - b.v), span_mean(temp_series_k, a.idx, b.idx), full});
  };
  for (const Point& p : turning_points(soc_series)) {
    st.push_back(p);
    while (st.size() >= 3) {
      size_t n = st.size();
      double x = std::abs(st[n - 1].v - st[n - 2].v);
      double y = std::abs(st[n - 2].v - st[n - 3].v);
      if (x < y) break;
      if (n == 3) {
        // range Y touches the series start: counts as a half cycle
        emit(st[0], st[1], false);
        st.pop_front();
      } else {
        emit(st[n - 3], st[n - 2], true);
        st.erase(st.begin() + (n - 3), st.begin() + (n - 1));
      }
    }
  }
  for (size_t i = 0; i + 1 < st.size(); ++i) emit(st[i], st[i + 1], false);
  return out;
}

double linear_daily_damage(double soc_avg, const std::vector<double>& dods,
                           const DegradationParams& p) {
  double idle = p.lin_idle_slope * soc_avg + p.lin_idle_icept;
  double cyc = 0.0;
  for (double d : dods)
    if (d > 0) cyc += p.lin_cycle_slope * d + p.lin_cycle_icept;
  return idle + 0.5 * cyc;
}

double f_temperature(double t_avg_k, const DegradationParams& p) {
  if (t_avg_k < 273.0 || t_avg_k > 333.0)
    throw ValidationError("f_temperature: temperature outside [273,333] K domain");
  if (t_avg_k <= 298.0) return std::exp(p.k5 / t_avg_k) / p.k6;
  return std::exp(p.k7 / t_avg_k) / p.k8;
}

double daily_degradation(double soc_avg, const std::vector<CycleRecord>& cycles,
                         const DegradationParams& p) {
  double xi = p.k1 * soc_avg * soc_avg + p.k2 * soc_avg;
  for (const CycleRecord& c : cycles)
    xi += c.weight() * (p.k3 * c.dod * c.dod + p.k4 * c.dod) * f_temperature(c.t_avg_k, p);
  return xi;
}

double lifetime_years(double annual_damage, const DegradationParams& p, double cap_years) {
  if (annual_damage <= 0) return cap_years;
  return std::min(cap_years, p.eol_fade / annual_damage);
}

}  // namespace gridstor
