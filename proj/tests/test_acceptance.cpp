#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "gridstor/conic/program.hpp"
#include "gridstor/degradation.hpp"
#include "gridstor/pipeline.hpp"
#include "gridstor/thermal.hpp"

using namespace gridstor;
using gridstor::conic::LinExpr;
namespace fs = std::filesystem;

// Acceptance gate: eight numbered criteria, one printed PASS/FAIL line
// each.  The doctest assertions carry the diagnostics; the printed line
// is the one-glance summary.

namespace {

void verdict(int id, bool ok, const std::string& msg) {
  std::printf("criterion %d: %s - %s\n", id, ok ? "PASS" : "FAIL", msg.c_str());
  std::fflush(stdout);
}

double elapsed_s(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Bus mk_bus(int id, BusKind kind, const std::string& sub, bool slack = false,
           double mu_impor = 0.0) {
  Bus b;
  b.id = id;
  b.kind = kind;
  b.subsystem = sub;
  b.slack = slack;
  b.mu_impor = mu_impor;
  return b;
}

Scenario tou_day(int days = 1, double temp_c = 20.0) {
  Scenario s;
  s.id = "day";
  s.days = days;
  Tariff t = default_tariff();
  for (int h = 0; h < kHoursPerDay; ++h) {
    s.price[h] = t.price_at(h);
    s.temp_k[h] = 273.15 + temp_c;
    s.wind_ms[h] = 0.0;
  }
  return s;
}

void set_load(Scenario& s, int node, double kw) {
  for (int h = 0; h < kHoursPerDay; ++h) s.load_p_kw[node][h] = kw;
}

// Five-bus AC feeder with reactive load and a reactive-capable unit.
HybridNetwork ac5() {
  HybridNetwork n;
  for (int i = 1; i <= 5; ++i) n.buses.push_back(mk_bus(i, BusKind::Ac, "ac1", i == 1));
  for (int i = 1; i <= 4; ++i) n.ac_branches.push_back({i, i + 1, 0.3, 0.3, 400.0});
  return n;
}

// One AC slack anchoring a four-bus DC feeder through the converter.
HybridNetwork dc4() {
  HybridNetwork n;
  n.buses.push_back(mk_bus(1, BusKind::Ac, "ac1", true));
  for (int i = 2; i <= 5; ++i) n.buses.push_back(mk_bus(i, BusKind::Dc, "dc"));
  for (int i = 2; i <= 4; ++i) n.dc_branches.push_back({i, i + 1, 0.3, 0.0, 400.0});
  Vsc v;
  v.ac_bus = 1;
  v.dc_bus = 2;
  v.s_kva = 2000;
  v.p_max_kw = 2000;
  v.q_max_kvar = 1000;
  v.mode = VscMode::UdcQ;
  n.vscs.push_back(v);
  return n;
}

// Nine buses, two subsystems, one converter; PV and storage on the DC
// side.
HybridNetwork hybrid9() {
  HybridNetwork n;
  for (int i = 1; i <= 5; ++i) n.buses.push_back(mk_bus(i, BusKind::Ac, "ac1", i == 1));
  for (int i = 6; i <= 9; ++i) n.buses.push_back(mk_bus(i, BusKind::Dc, "dc"));
  for (int i = 1; i <= 4; ++i) n.ac_branches.push_back({i, i + 1, 0.3, 0.3, 400.0});
  for (int i = 6; i <= 8; ++i) n.dc_branches.push_back({i, i + 1, 0.2, 0.0, 400.0});
  Vsc v;
  v.ac_bus = 5;
  v.dc_bus = 6;
  v.s_kva = 2000;
  v.p_max_kw = 2000;
  v.q_max_kvar = 1000;
  v.mode = VscMode::UdcQ;
  n.vscs.push_back(v);
  return n;
}

StorageDesign sess_at(int node, double e_kwh, double p_kw, bool q = false) {
  StorageDesign d;
  d.node = node;
  d.kind = StorageKind::Sess;
  d.e_rate_kwh = e_kwh;
  d.p_rate_kw = p_kw;
  d.soc0 = 0.5;
  d.q_enable = q;
  return d;
}

// --- shared artifacts between criteria -------------------------------

std::vector<DispatchSolution> g_accepted;        // solutions audited by criterion 3
std::optional<RunConfig> g_plan_cfg;             // criterion 7 fixture
std::optional<PlanResult> g_plan;                // criterion 7 outcome

// --- independent rainflow reference (four-point + residue) -----------

struct RefCycle {
  double dod;
  double t_avg;
  bool full;
};

std::vector<RefCycle> ref_rainflow(const std::vector<double>& s, const std::vector<double>& temp) {
  // extrema extraction
  std::vector<size_t> ext;
  for (size_t i = 0; i < s.size(); ++i) {
    if (!ext.empty() && s[i] == s[ext.back()]) continue;
    while (ext.size() >= 2) {
      double a = s[ext[ext.size() - 2]], b = s[ext.back()];
      if ((b - a) * (s[i] - b) > 0) ext.pop_back();
      else break;
    }
    ext.push_back(i);
  }
  auto tmean = [&](size_t i, size_t j) {
    if (temp.empty()) return 0.0;
    if (i > j) std::swap(i, j);
    double sum = 0;
    for (size_t k = i; k <= j; ++k) sum += temp[k];
    return sum / static_cast<double>(j - i + 1);
  };
  std::vector<RefCycle> out;
  // four-point inner-pair extraction: a full cycle is any inner range
  // enclosed by both neighbours
  std::vector<size_t> res;
  for (size_t idx : ext) {
    res.push_back(idx);
    while (res.size() >= 4) {
      size_t n = res.size();
      double r1 = std::abs(s[res[n - 3]] - s[res[n - 4]]);
      double r2 = std::abs(s[res[n - 2]] - s[res[n - 3]]);
      double r3 = std::abs(s[res[n - 1]] - s[res[n - 2]]);
      if (r2 <= r1 && r2 <= r3) {
        out.push_back({r2, tmean(res[n - 3], res[n - 2]), true});
        res.erase(res.begin() + (n - 3), res.begin() + (n - 1));
      } else {
        break;
      }
    }
  }
  // residue decomposes into half cycles
  for (size_t i = 0; i + 1 < res.size(); ++i)
    out.push_back({std::abs(s[res[i]] - s[res[i + 1]]), tmean(res[i], res[i + 1]), false});
  return out;
}

// --- exact DC feeder power flow for the brute-force oracle ------------

struct DcToy {
  // 1 -(r12)- 2 -(r23)- 3, per-unit on 1000 kVA; device at bus 3
  double r12 = 0.02, r23 = 0.02;
  double load2 = 0.15, load3 = 0.10;  // pu
  std::array<double, 4> price{0.044, 0.044, 0.196, 0.196};
  double s_base = 1000.0;
  double p_max = 100.0;    // kW
  double soc_lo = 25.0, soc_hi = 225.0, soc0 = 25.0;  // kWh, unit efficiency
  double lambda1 = 0.67, lambda2 = 0.33;
};

// Sending-end flow satisfying p - r p^2 / v2_from = demand.
bool branch_flow(double demand, double r, double v2_from, double& p) {
  double disc = 1.0 - 4.0 * r * demand / v2_from;
  if (disc < 0) return false;
  p = (1.0 - std::sqrt(disc)) / (2.0 * r / v2_from);
  return true;
}

// Exact hourly objective contribution for a given net device power
// (kW, discharge positive); false when no physical flow exists.
bool exact_hour(const DcToy& t, double p_dev_kw, double price, double& cost) {
  double inj = p_dev_kw / t.s_base;
  double v2_2 = 1.0;
  double p12 = 0, p23 = 0;
  for (int it = 0; it < 60; ++it) {
    if (!branch_flow(t.load3 - inj, t.r23, v2_2, p23)) return false;
    double i2_23 = p23 * p23 / v2_2;
    if (!branch_flow(t.load2 + p23, t.r12, 1.0, p12)) return false;
    double i2_12 = p12 * p12;
    double next = 1.0 - 2.0 * t.r12 * p12 + t.r12 * t.r12 * i2_12;
    if (std::abs(next - v2_2) < 1e-15) {
      v2_2 = next;
      break;
    }
    v2_2 = next;
  }
  double i2_12 = p12 * p12;
  double i2_23 = p23 * p23 / v2_2;
  double loss = (t.r12 * i2_12 + t.r23 * i2_23) * t.s_base * price;
  double arb = price * p_dev_kw;
  cost = t.lambda1 * loss - t.lambda2 * arb;
  return true;
}

}  // namespace

TEST_CASE("criterion 1: conic relaxation tightness on three radial fixtures") {
  DispatchOptions opts;
  opts.with_thermal = false;
  bool ok = true;
  std::string msg;

  struct Fixture {
    const char* name;
    HybridNetwork net;
    Scenario scen;
    StorageDesign unit;
  };
  std::vector<Fixture> fx;

  {
    Fixture f{"ac5", ac5(), tou_day(), sess_at(3, 1000, 300, true)};
    set_load(f.scen, 2, 300);
    set_load(f.scen, 3, 200);
    set_load(f.scen, 4, 150);
    set_load(f.scen, 5, 100);
    for (int h = 0; h < kHoursPerDay; ++h) {
      f.scen.load_q_kvar[2][h] = 100;
      f.scen.load_q_kvar[4][h] = 50;
    }
    fx.push_back(std::move(f));
  }
  {
    Fixture f{"dc4", dc4(), tou_day(), sess_at(4, 800, 250)};
    set_load(f.scen, 3, 200);
    set_load(f.scen, 4, 150);
    set_load(f.scen, 5, 250);
    fx.push_back(std::move(f));
  }
  {
    Fixture f{"hybrid9", hybrid9(), tou_day(), sess_at(8, 800, 250)};
    set_load(f.scen, 2, 250);
    set_load(f.scen, 3, 150);
    set_load(f.scen, 4, 200);
    set_load(f.scen, 7, 150);
    set_load(f.scen, 8, 200);
    set_load(f.scen, 9, 100);
    for (int h = 8; h < 17; ++h) f.scen.pv_kw[8][h] = 300.0 * std::sin((h - 8) * M_PI / 8.0);
    fx.push_back(std::move(f));
  }

  for (Fixture& f : fx) {
    f.net.validate();
    auto t0 = std::chrono::steady_clock::now();
    DispatchSolution sol = solve_dispatch(f.net, f.scen, {f.unit}, opts);
    double secs = elapsed_s(t0);
    bool fok = sol.status == conic::SolveStatus::Optimal && sol.socr_gap <= 1e-4 && secs < 60.0;
    CHECK(sol.status == conic::SolveStatus::Optimal);
    CHECK(sol.socr_gap <= 1e-4);
    CHECK(secs < 60.0);
    char buf[128];
    std::snprintf(buf, sizeof buf, "%s gap %.2e in %.2fs; ", f.name, sol.socr_gap, secs);
    msg += buf;
    ok = ok && fok;
    if (fok) g_accepted.push_back(std::move(sol));
  }
  verdict(1, ok, msg);
  CHECK(ok);
}

TEST_CASE("criterion 2: mixed-integer dispatch matches a brute-force enumeration") {
  auto t0 = std::chrono::steady_clock::now();
  DcToy toy;

  // exact enumeration over an 11-level net-power grid per hour (the
  // charge/discharge phase pattern is implied by the sign)
  std::vector<double> levels;
  for (int k = -5; k <= 5; ++k) levels.push_back(toy.p_max * k / 5.0);
  double best = 1e18;
  std::array<int, 4> idx{};
  for (idx[0] = 0; idx[0] < 11; ++idx[0])
    for (idx[1] = 0; idx[1] < 11; ++idx[1])
      for (idx[2] = 0; idx[2] < 11; ++idx[2])
        for (idx[3] = 0; idx[3] < 11; ++idx[3]) {
          double soc = toy.soc0, total = 0;
          bool feas = true;
          for (int h = 0; h < 4 && feas; ++h) {
            double p = levels[idx[h]];
            soc -= p;  // unit efficiencies: net kW over one hour
            if (soc < toy.soc_lo - 1e-9 || soc > toy.soc_hi + 1e-9) feas = false;
            double c;
            if (feas && exact_hour(toy, p, toy.price[h], c)) total += c;
            else feas = false;
          }
          if (feas && std::abs(soc - toy.soc0) < 1e-9 && total < best) best = total;
        }

  // the same four hours as a mixed-integer conic program
  conic::Model m;
  std::vector<int> pdis(4), pch(4), mu(4), soc(5);
  std::vector<int> p12(4), p23(4), i212(4), i223(4), v22(4), v23(4);
  for (int h = 0; h < 4; ++h) {
    pdis[h] = m.add_var("pdis" + std::to_string(h), 0.0, toy.p_max);
    pch[h] = m.add_var("pch" + std::to_string(h), -toy.p_max, 0.0);
    mu[h] = m.add_binary("mu" + std::to_string(h), 0);
    p12[h] = m.add_var("p12_" + std::to_string(h), -2.0, 2.0);
    p23[h] = m.add_var("p23_" + std::to_string(h), -2.0, 2.0);
    i212[h] = m.add_var("i212_" + std::to_string(h), 0.0, 4.0);
    i223[h] = m.add_var("i223_" + std::to_string(h), 0.0, 4.0);
    v22[h] = m.add_var("v22_" + std::to_string(h), 0.25, 2.25);
    v23[h] = m.add_var("v23_" + std::to_string(h), 0.25, 2.25);
  }
  for (int h = 0; h <= 4; ++h)
    soc[h] = m.add_var("soc" + std::to_string(h), toy.soc_lo, toy.soc_hi);
  m.fix(soc[0], toy.soc0);
  m.fix(soc[4], toy.soc0);
  for (int h = 0; h < 4; ++h) {
    // exclusivity
    LinExpr e1 = LinExpr::of(pdis[h]);
    e1.add(mu[h], -toy.p_max);
    m.add_le(e1);
    LinExpr e2 = LinExpr::of(pch[h], -1.0);
    e2.add(mu[h], toy.p_max);
    e2 += LinExpr(-toy.p_max);
    m.add_le(e2);
    // storage balance, unit efficiency
    LinExpr sb = LinExpr::of(soc[h + 1]);
    sb.add(soc[h], -1.0);
    sb.add(pdis[h], 1.0);
    sb.add(pch[h], 1.0);
    m.add_eq(sb);
    // nodal balances (pu)
    LinExpr b2 = LinExpr::of(p23[h]);
    b2.add(p12[h], -1.0);
    b2.add(i212[h], toy.r12);
    b2 += LinExpr(toy.load2);
    m.add_eq(b2);
    LinExpr b3 = LinExpr::of(p23[h], -1.0);
    b3.add(i223[h], toy.r23);
    b3.add(pdis[h], -1.0 / toy.s_base);
    b3.add(pch[h], -1.0 / toy.s_base);
    b3 += LinExpr(toy.load3);
    m.add_eq(b3);
    // voltage drops
    LinExpr v2 = LinExpr::of(v22[h]);
    v2.add(p12[h], 2.0 * toy.r12);
    v2.add(i212[h], -toy.r12 * toy.r12);
    v2 += LinExpr(-1.0);
    m.add_eq(v2);
    LinExpr v3 = LinExpr::of(v23[h]);
    v3.add(v22[h], -1.0);
    v3.add(p23[h], 2.0 * toy.r23);
    v3.add(i223[h], -toy.r23 * toy.r23);
    m.add_eq(v3);
    // relaxed current definitions
    m.add_rotated(LinExpr::of(i212[h]), LinExpr(0.5), {LinExpr::of(p12[h])});
    m.add_rotated(LinExpr::of(i223[h]), LinExpr::of(v22[h], 0.5), {LinExpr::of(p23[h])});
  }
  LinExpr obj;
  for (int h = 0; h < 4; ++h) {
    obj.add(i212[h], toy.lambda1 * toy.r12 * toy.s_base * toy.price[h]);
    obj.add(i223[h], toy.lambda1 * toy.r23 * toy.s_base * toy.price[h]);
    obj.add(pdis[h], -toy.lambda2 * toy.price[h]);
    obj.add(pch[h], -toy.lambda2 * toy.price[h]);
  }
  m.minimize(obj);
  conic::MipResult r = conic::solve_misocp(m);
  double secs = elapsed_s(t0);

  double rel = std::abs(r.objective - best) / std::max(1.0, std::abs(best));
  bool ok = r.status == conic::SolveStatus::Optimal && rel <= 1e-3 && secs < 300.0;
  CHECK(r.status == conic::SolveStatus::Optimal);
  CHECK(rel <= 1e-3);
  CHECK(secs < 300.0);
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "enumeration %.6f $, incumbent %.6f $, rel diff %.2e, %.1fs", best,
                r.objective, rel, secs);
  verdict(2, ok, buf);
  CHECK(ok);
}

TEST_CASE("criterion 3: device invariants on every accepted solution") {
  DispatchOptions opts;
  opts.with_thermal = false;

  // add a mobile unit with active reserve floors to the audited pool
  HybridNetwork n;
  n.buses.push_back(mk_bus(1, BusKind::Ac, "ac1", true));
  n.buses.push_back(mk_bus(2, BusKind::Ac, "ac1", false, 0.5));
  n.ac_branches.push_back({1, 2, 0.4, 0.4, 500.0});
  Scenario s = tou_day();
  set_load(s, 2, 400);
  StorageDesign mess;
  mess.node = 2;
  mess.kind = StorageKind::Mess;
  mess.n_modules = 1;
  mess.soc0 = 0.6;
  DispatchSolution mess_sol = solve_dispatch(n, s, {mess}, opts);
  REQUIRE(mess_sol.status == conic::SolveStatus::Optimal);
  g_accepted.push_back(mess_sol);

  bool ok = !g_accepted.empty();
  int devices = 0;
  for (const DispatchSolution& sol : g_accepted) {
    for (const DeviceDispatch& d : sol.devices) {
      ++devices;
      for (int t = 0; t < kHoursPerDay; ++t) {
        // exclusivity: one phase indicator per hour, powers gated by it
        bool bin = d.mu_dis[t] == 0 || d.mu_dis[t] == 1;
        bool gate = d.p_dis_kw[t] <= d.rating.p_rate_kw * d.mu_dis[t] + 1e-6 &&
                    -d.p_ch_kw[t] <= d.rating.p_rate_kw * (1 - d.mu_dis[t]) + 1e-6;
        CHECK(bin);
        CHECK(gate);
        ok = ok && bin && gate;
      }
      for (int t = 0; t <= kHoursPerDay; ++t) {
        bool band = d.soc[t] >= 0.10 - 1e-9 && d.soc[t] <= 0.90 + 1e-9;
        bool floor = d.soc[t] >= d.soc_floor[t] - 1e-6;
        CHECK(band);
        CHECK(floor);
        ok = ok && band && floor;
      }
      bool periodic = std::abs(d.soc[0] - d.soc[kHoursPerDay]) <= 1e-6;
      CHECK(periodic);
      ok = ok && periodic;
    }
  }
  // the mobile unit's floor series must actually bind above the band floor
  bool floors_active = false;
  for (double f : mess_sol.devices[0].soc_floor) floors_active = floors_active || f > 0.10 + 1e-9;
  CHECK(floors_active);
  ok = ok && floors_active;

  char buf[96];
  std::snprintf(buf, sizeof buf, "%d devices audited across %zu solutions", devices,
                g_accepted.size());
  verdict(3, ok, buf);
  CHECK(ok);
}

TEST_CASE("criterion 4: thermal trajectory closure") {
  HybridNetwork n;
  n.buses.push_back(mk_bus(1, BusKind::Ac, "ac1", true));
  DispatchOptions opts;  // thermal on
  Scenario s = tou_day(1, 32.0);
  for (int h = 0; h < kHoursPerDay; ++h) s.wind_ms[h] = 2.0;
  StorageDesign d = sess_at(1, 2000, 500);
  DispatchSolution sol = solve_dispatch(n, s, {d}, opts);
  REQUIRE(sol.status == conic::SolveStatus::Optimal);
  const DeviceDispatch& dev = sol.devices[0];
  const ThermalParams& tp = opts.thermal;

  double worst_dt = 0, worst_res = 0, worst_sim_res = 0;
  bool bounds_ok = true, order_ok = true;
  ThermalState st{dev.t_cess_k[0], dev.t_bar_k[0]};
  for (int h = 0; h < kHoursPerDay; ++h) {
    double i = cell_current(dev.p_ch_kw[h] / d.n_cess, dev.p_dis_kw[h] / d.n_cess, dev.rating, tp);
    double qg = heat_generation(i, tp);
    HvacAction a{dev.p_hot_kw[h], dev.p_cool_kw[h], dev.x_air[h] != 0, dev.x_vent[h] != 0};
    ThermalState nx = balance_step(st, a, qg, s.temp_k[h], s.wind_ms[h], tp);
    worst_dt = std::max(worst_dt, std::abs(nx.t_cess_k - dev.t_cess_k[h + 1]));
    worst_res = std::max(worst_res,
                         std::abs(balance_residual_kwh({dev.t_cess_k[h], dev.t_bar_k[h]},
                                                       {dev.t_cess_k[h + 1], dev.t_bar_k[h + 1]},
                                                       a, qg, s.temp_k[h], s.wind_ms[h], tp)));
    worst_sim_res = std::max(worst_sim_res,
                             std::abs(balance_residual_kwh(st, nx, a, qg, s.temp_k[h],
                                                           s.wind_ms[h], tp)));
    bounds_ok = bounds_ok && dev.t_cess_k[h + 1] >= tp.t_cess_min_k - 1e-6 &&
                dev.t_cess_k[h + 1] <= tp.t_cess_max_k + 1e-6;
    // cells run no cooler than the air they heat
    order_ok = order_ok && dev.t_bar_k[h + 1] >= dev.t_cess_k[h + 1] - 1e-6;
    st = nx;
  }
  bool ok = worst_dt <= 1e-6 && worst_res <= 1e-9 && worst_sim_res <= 1e-9 && bounds_ok &&
            order_ok;
  CHECK(worst_dt <= 1e-6);
  CHECK(worst_res <= 1e-9);
  CHECK(worst_sim_res <= 1e-9);
  CHECK(bounds_ok);
  CHECK(order_ok);
  char buf[128];
  std::snprintf(buf, sizeof buf, "replay dT %.2e K, balance residual %.2e kWh", worst_dt,
                worst_res);
  verdict(4, ok, buf);
  CHECK(ok);
}

TEST_CASE("criterion 5: degradation numerics and rainflow cross-check") {
  bool ok = true;
  double f_lo = f_temperature(273.0);
  double f_hi = f_temperature(333.0);
  ok = ok && std::abs(f_lo - 0.861) <= 1e-3 && std::abs(f_hi - 0.492) <= 1e-3;
  CHECK(f_lo == doctest::Approx(0.861).epsilon(2e-3));
  CHECK(f_hi == doctest::Approx(0.492).epsilon(2e-3));

  // lifetime is the exact fade-budget quotient
  ok = ok && lifetime_years(0.04) == 0.2 / 0.04;
  CHECK(lifetime_years(0.04) == 0.2 / 0.04);

  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> usoc(0.10, 0.90), utemp(280.0, 310.0);
  std::uniform_int_distribution<int> ulen(5, 40);
  int mismatches = 0;
  for (int trial = 0; trial < 100; ++trial) {
    int len = ulen(rng);
    std::vector<double> soc(len), temp(len);
    for (int i = 0; i < len; ++i) {
      soc[i] = usoc(rng);
      temp[i] = utemp(rng);
    }
    auto got = rainflow(soc, temp);
    auto want = ref_rainflow(soc, temp);
    auto key = [](double dod, double t, bool full) {
      return std::make_tuple(std::llround(dod * 1e9), std::llround(t * 1e6), full);
    };
    std::vector<std::tuple<long long, long long, bool>> a, b;
    for (const CycleRecord& c : got) a.push_back(key(c.dod, c.t_avg_k, c.full));
    for (const RefCycle& c : want) b.push_back(key(c.dod, c.t_avg, c.full));
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    if (a != b) ++mismatches;
  }
  ok = ok && mismatches == 0;
  CHECK(mismatches == 0);
  char buf[128];
  std::snprintf(buf, sizeof buf, "f(273K)=%.4f f(333K)=%.4f, %d/100 rainflow mismatches",
                f_lo, f_hi, mismatches);
  verdict(5, ok, buf);
  CHECK(ok);
}

TEST_CASE("criterion 6: cost formula reproduction") {
  bool ok = true;
  double c = crf(0.10, 20);
  ok = ok && std::abs(c - 0.117460) <= 1e-6;
  CHECK(std::abs(c - 0.117460) <= 1e-6);

  EconParams p;
  BessRating r;
  r.e_rate_kwh = 3500;
  r.p_rate_kw = 500;
  double cap = annualized_capital(r, p);
  // full-precision value; the published rounded figure 64720.5 is
  // recovered when the recovery factor is first rounded to 6 decimals
  ok = ok && std::abs(cap - 64720.25) <= 0.1;
  CHECK(cap == doctest::Approx(64720.25).epsilon(1e-6));
  double cap_rounded = (156.0 * 3500 + 10.0 * 500) * 0.117460;
  ok = ok && std::abs(cap_rounded - 64720.5) <= 0.1;
  CHECK(std::abs(cap_rounded - 64720.5) <= 0.1);

  std::array<double, kHoursPerDay> p_net{}, price{};
  price.fill(0.1);
  price[2] = 0.044;
  price[20] = 0.196;
  p_net[2] = -100.0;
  p_net[20] = 90.0;
  double arb = arbitrage_day(p_net, price);
  ok = ok && std::abs(arb - 13.24) <= 1e-12;
  CHECK(arb == doctest::Approx(13.24).epsilon(1e-12));

  // penalty branch fires exactly at the gap threshold
  CostReport below = assemble_stage1(0, 0, 0, 0, 0, 0, 0, p.gap_max * 0.999, p);
  CostReport at = assemble_stage1(0, 0, 0, 0, 0, 0, 0, p.gap_max, p);
  CostReport above = assemble_stage1(0, 0, 0, 0, 0, 0, 0, p.gap_max * 1.001, p);
  ok = ok && below.penalty == 0.0 && at.penalty == p.c_pun && above.penalty == p.c_pun;
  CHECK(below.penalty == 0.0);
  CHECK(at.penalty == p.c_pun);
  CHECK(above.penalty == p.c_pun);

  char buf[160];
  std::snprintf(buf, sizeof buf,
                "crf %.6f, capital %.2f $ (rounded-factor form %.2f), arbitrage %.2f $", c,
                cap, cap_rounded, arb);
  verdict(6, ok, buf);
  CHECK(ok);
}

namespace {

// Heavy-load event fixture: feeder 1-2 whose evening peaks breach the
// voltage band; the typical day forces a stationary unit that covers
// the two lighter peak hours, the event adds one hour beyond its power
// rating that only rented mobile modules can carry.
RunConfig event_fixture() {
  fs::path d = fs::temp_directory_path() / "gridstor_acceptance";
  fs::create_directories(d);
  {
    std::ofstream out(d / "network.txt");
    out << "base_kva 1000\n[buses]\n"
           "1 ac1 10 0.97 1.03 1 0\n"
           "2 ac1 10 0.97 1.03 0 0.05\n"
           "[branches]\n1 2 2.0 0.4 500\n"
           "[placements]\n"
           "2 sess 0 2500 0 400 0 1 0\n"
           "2 mess 0 0 0 0 3 1 0\n";
  }
  auto day = [&](const char* name, const char* id, int days, bool stage2,
                 const std::array<double, 24>& load) {
    std::ofstream out(d / name);
    out << "# id " << id << "\n# days " << days << "\n";
    if (stage2) out << "# stage stage2\n";
    out << "hour,load_p_2,temp_c,wind_ms\n";
    for (int h = 0; h < 24; ++h) out << h << "," << load[h] << ",20,0\n";
  };
  std::array<double, 24> typical{}, event{};
  typical.fill(300.0);
  for (int h = 13; h <= 19; ++h) typical[h] = 1600.0;
  typical[13] = 1700.0;
  event = typical;
  event[17] = 2800.0;
  event[18] = 1600.0;
  event[19] = 1600.0;
  for (int h = 13; h <= 16; ++h) event[h] = 300.0;
  day("typical.csv", "typical", 363, false, typical);
  day("event.csv", "event", 2, true, event);
  {
    std::ofstream out(d / "plan.json.cfg");
    out << "{\n"
           "  \"network\": \"network.txt\",\n"
           "  \"scenarios\": [\"typical.csv\", \"event.csv\"],\n"
           "  \"out\": \"out\",\n"
           "  \"search\": {\"seed\": 17, \"jobs\": 4, \"population\": 12, \"generations\": 10},\n"
           "  \"dispatch\": {\"with_thermal\": false}\n}\n";
  }
  return RunConfig::load((d / "plan.json.cfg").string());
}

}  // namespace

TEST_CASE("criterion 7: violations vanish only under the joint plan") {
  auto t0 = std::chrono::steady_clock::now();
  RunConfig cfg = event_fixture();
  PlanResult plan = run_plan(cfg);
  double secs = elapsed_s(t0);

  const ScenarioOutcome* ev = nullptr;
  for (const ScenarioOutcome& o : plan.outcomes)
    if (o.id == "event") ev = &o;
  REQUIRE(ev != nullptr);

  bool ok = ev->violations_baseline > 0 && ev->violations_sess < ev->violations_baseline &&
            ev->violations_sess > 0 && ev->violations_final == 0 && !plan.sess.empty() &&
            !plan.mess.empty() && secs < 900.0;
  CHECK(ev->violations_baseline > 0);
  CHECK(ev->violations_sess < ev->violations_baseline);
  CHECK(ev->violations_sess > 0);
  CHECK(ev->violations_final == 0);
  CHECK(!plan.sess.empty());
  CHECK(!plan.mess.empty());
  CHECK(secs < 900.0);

  char buf[160];
  std::snprintf(buf, sizeof buf,
                "event violations %d -> %d (stationary) -> %d (joint) in %.0fs",
                ev->violations_baseline, ev->violations_sess, ev->violations_final, secs);
  verdict(7, ok, buf);
  CHECK(ok);

  g_plan_cfg = cfg;
  g_plan = std::move(plan);
}

TEST_CASE("criterion 8: search determinism and monotone progress") {
  bool ok = true;

  // synthetic convex fitness over the default 60 generations
  SearchConfig cfg;
  cfg.seed = 99;
  auto fit = [](const std::vector<double>& g) {
    return (g[0] - 2.0) * (g[0] - 2.0) + 0.5 * (g[1] + 1.0) * (g[1] + 1.0);
  };
  std::vector<GeneSpec> spec{{-5, 5, false}, {-5, 5, false}};
  SearchResult a = ga_sa_search(spec, fit, cfg);
  SearchResult b = ga_sa_search(spec, fit, cfg);
  REQUIRE(a.trace.size() == 61);
  for (size_t i = 0; i < a.trace.size(); ++i) {
    bool same = a.trace[i].best == b.trace[i].best && a.trace[i].mean == b.trace[i].mean;
    bool mono = i == 0 || a.trace[i].best <= a.trace[i - 1].best;
    CHECK(same);
    CHECK(mono);
    ok = ok && same && mono;
  }

  // the planning fixture: bit-identical stage-1 trace on a re-run, and
  // monotone elitist traces for both stages of the stored plan
  REQUIRE(g_plan.has_value());
  REQUIRE(g_plan_cfg.has_value());
  PlanResult again = run_stage1(*g_plan_cfg);
  REQUIRE(again.stage1_trace.size() == g_plan->stage1_trace.size());
  for (size_t i = 0; i < again.stage1_trace.size(); ++i) {
    bool same = again.stage1_trace[i].best == g_plan->stage1_trace[i].best &&
                again.stage1_trace[i].mean == g_plan->stage1_trace[i].mean;
    CHECK(same);
    ok = ok && same;
  }
  ok = ok && again.stage1_fitness == g_plan->stage1_fitness;
  CHECK(again.stage1_fitness == g_plan->stage1_fitness);
  for (const std::vector<GenerationStat>* tr : {&g_plan->stage1_trace, &g_plan->stage2_trace})
    for (size_t i = 1; i < tr->size(); ++i) {
      bool mono = (*tr)[i].best <= (*tr)[i - 1].best;
      CHECK(mono);
      ok = ok && mono;
    }

  char buf[128];
  std::snprintf(buf, sizeof buf,
                "synthetic and planning traces bit-identical, %zu+%zu generations monotone",
                g_plan->stage1_trace.size(), g_plan->stage2_trace.size());
  verdict(8, ok, buf);
  CHECK(ok);
}
