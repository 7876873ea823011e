#include "gridstor/dispatch.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <set>

#include "gridstor/degradation.hpp"

namespace gridstor {

namespace {

using conic::LinExpr;
using conic::Model;

constexpr int T = kHoursPerDay;
constexpr double kDt = 1.0;

struct OrientedBranch {
  int from = 0, to = 0;
  bool dc = false;
  double r_pu = 0.0, x_pu = 0.0, i2_max_pu = 0.0;
};

struct Topology {
  std::vector<OrientedBranch> br;
  std::map<int, std::vector<size_t>> out;  // bus -> branches leaving it
  std::map<int, size_t> in;                // bus -> parent branch
  std::vector<int> ac_roots;
  int dc_root = -1;
};

Topology orient(const HybridNetwork& net) {
  Topology tp;
  for (const Bus& b : net.buses)
    if (b.slack) tp.ac_roots.push_back(b.id);
  for (const Vsc& v : net.vscs)
    if (v.mode == VscMode::UdcQ) tp.dc_root = v.dc_bus;

  struct Edge {
    int other;
    const Branch* b;
    bool dc;
    bool forward;  // file direction matches traversal
  };
  std::map<int, std::vector<Edge>> adj;
  for (const Branch& b : net.ac_branches) {
    adj[b.from].push_back({b.to, &b, false, true});
    adj[b.to].push_back({b.from, &b, false, false});
  }
  for (const Branch& b : net.dc_branches) {
    adj[b.from].push_back({b.to, &b, true, true});
    adj[b.to].push_back({b.from, &b, true, false});
  }

  std::vector<int> roots = tp.ac_roots;
  if (tp.dc_root >= 0) roots.push_back(tp.dc_root);
  std::set<int> seen;
  for (int root : roots) {
    std::queue<int> q;
    q.push(root);
    seen.insert(root);
    while (!q.empty()) {
      int u = q.front();
      q.pop();
      for (const Edge& e : adj[u]) {
        if (seen.count(e.other)) continue;
        seen.insert(e.other);
        OrientedBranch ob;
        ob.from = u;
        ob.to = e.other;
        ob.dc = e.dc;
        double zb = net.z_base_ohm(u);
        ob.r_pu = e.b->r_ohm / zb;
        ob.x_pu = e.b->x_ohm / zb;
        double i_rel = e.b->i_max_a / net.i_base_a(u);
        ob.i2_max_pu = i_rel * i_rel;
        size_t idx = tp.br.size();
        tp.br.push_back(ob);
        tp.out[u].push_back(idx);
        tp.in[e.other] = idx;
        q.push(e.other);
      }
    }
  }
  return tp;
}

struct DeviceVars {
  StorageDesign design;
  BessRating rating;
  bool on_dc = false;
  bool thermal = false;
  std::array<int, T> pdis{}, pch{}, ibat2{};
  std::array<int, T> q{};  // -1 when absent
  std::array<int, T> mu{};
  bool owns_mu = true;
  std::array<int, T> ph{}, pc{};
  std::array<int, T> xv{}, tx{};  // -1 when vent inactive that hour
  std::array<int, T + 1> soc{}, tc{}, tbar{};
  std::array<double, T + 1> floor{};
};

struct VscVars {
  const Vsc* v = nullptr;
  double s_pu = 0, eta = 0;
  std::array<int, T> p{}, q{}, pa{};
};

}  // namespace

bool StorageDesign::active(const EconParams& p) const {
  (void)p;
  if (kind == StorageKind::Mess) return n_modules > 0;
  return e_rate_kwh > 0 && p_rate_kw > 0;
}

BessRating make_rating(const StorageDesign& d, const DeviceParams& dp, const EconParams& ep) {
  BessRating r;
  if (d.kind == StorageKind::Mess) {
    r.e_rate_kwh = d.n_modules * ep.e_rate_mess_kwh;
    r.p_rate_kw = d.n_modules * ep.p_rate_mess_kw;
  } else {
    r.e_rate_kwh = d.e_rate_kwh;
    r.p_rate_kw = d.p_rate_kw;
  }
  r.q_rate_kvar = d.q_enable ? r.p_rate_kw : 0.0;
  r.s_pcs_kva = r.p_rate_kw;
  r.soc_min = dp.soc_min;
  r.soc_max = dp.soc_max;
  r.soc0 = d.soc0;
  r.self_discharge = dp.self_discharge;
  r.eta_c = dp.eta_c;
  r.eta_d = dp.eta_d;
  r.eta_pcs = dp.eta_pcs;
  r.n_cess = std::max(1, d.n_cess);
  r.node = d.node;
  r.kind = d.kind;
  r.colocated = d.colocated;
  return r;
}

DispatchSolution solve_dispatch(const HybridNetwork& net, const Scenario& scen,
                                const std::vector<StorageDesign>& designs,
                                const DispatchOptions& opts) {
  const double sb = net.base_kva;
  Topology tp = orient(net);
  Model m;

  auto series = [&](const std::map<int, std::array<double, T>>& src, int node,
                    int t) -> double {
    auto it = src.find(node);
    return it == src.end() ? 0.0 : it->second[t];
  };

  // squared voltages
  std::map<int, std::array<int, T>> v2;
  std::set<int> roots(tp.ac_roots.begin(), tp.ac_roots.end());
  if (tp.dc_root >= 0) roots.insert(tp.dc_root);
  std::vector<int> penalty_slacks;
  for (const Bus& b : net.buses) {
    double lo = b.v_min * b.v_min, hi = b.v_max * b.v_max;
    for (int t = 0; t < T; ++t) {
      int v = m.add_var("v2_" + std::to_string(b.id) + "_" + std::to_string(t),
                        opts.penalty_relaxed ? 0.25 : lo, opts.penalty_relaxed ? 2.25 : hi);
      if (roots.count(b.id)) m.fix(v, 1.0);
      v2[b.id][t] = v;
      if (opts.penalty_relaxed && !roots.count(b.id)) {
        int shi = m.add_var("sv_hi", 0.0, conic::kUnbounded);
        int slo = m.add_var("sv_lo", 0.0, conic::kUnbounded);
        LinExpr ehi = LinExpr::of(v);
        ehi.add(shi, -1.0);
        ehi -= LinExpr(hi);
        m.add_le(ehi);  // v2 - hi <= shi
        LinExpr elo = LinExpr(lo);
        elo.add(v, -1.0).add(slo, -1.0);
        m.add_le(elo);  // lo - v2 <= slo
        penalty_slacks.push_back(shi);
        penalty_slacks.push_back(slo);
      }
    }
  }

  // branch flows
  std::vector<std::array<int, T>> bp(tp.br.size()), bq(tp.br.size()), bi2(tp.br.size());
  for (size_t k = 0; k < tp.br.size(); ++k) {
    const OrientedBranch& ob = tp.br[k];
    double flow_big = 1.2 * std::sqrt(ob.i2_max_pu) * 1.1;
    double i2_hi = opts.penalty_relaxed ? 25.0 * ob.i2_max_pu : ob.i2_max_pu;
    if (opts.penalty_relaxed) flow_big *= 5.0;
    for (int t = 0; t < T; ++t) {
      std::string tag = std::to_string(ob.from) + "_" + std::to_string(ob.to) + "_" +
                        std::to_string(t);
      bp[k][t] = m.add_var("bp_" + tag, -flow_big, flow_big);
      bq[k][t] = ob.dc ? -1 : m.add_var("bq_" + tag, -flow_big, flow_big);
      bi2[k][t] = m.add_var("bi2_" + tag, 0.0, i2_hi);
      if (opts.penalty_relaxed) {
        int s = m.add_var("si2", 0.0, conic::kUnbounded);
        LinExpr e = LinExpr::of(bi2[k][t]);
        e.add(s, -1.0);
        e -= LinExpr(ob.i2_max_pu);
        m.add_le(e);
        penalty_slacks.push_back(s);
      }
    }
  }

  // slack imports at AC roots
  std::map<int, std::array<int, T>> sp, sq;
  for (int root : tp.ac_roots)
    for (int t = 0; t < T; ++t) {
      sp[root][t] = m.add_var("sp_" + std::to_string(root) + "_" + std::to_string(t),
                              -opts.slack_import_limit_pu, opts.slack_import_limit_pu);
      sq[root][t] = m.add_var("sq_" + std::to_string(root) + "_" + std::to_string(t),
                              -opts.slack_import_limit_pu, opts.slack_import_limit_pu);
    }

  // converters: p positive DC -> AC, pa the |p| epigraph
  std::vector<VscVars> vv;
  for (const Vsc& v : net.vscs) {
    VscVars w;
    w.v = &v;
    w.s_pu = v.s_kva / sb;
    w.eta = v.eta_loss;
    double pmax = v.p_max_kw / sb, qmax = v.q_max_kvar / sb;
    for (int t = 0; t < T; ++t) {
      std::string tag = std::to_string(v.ac_bus) + "_" + std::to_string(t);
      w.p[t] = m.add_var("vp_" + tag, -pmax, pmax);
      w.q[t] = m.add_var("vq_" + tag, -qmax, qmax);
      w.pa[t] = m.add_var("vpa_" + tag, 0.0, w.s_pu);
      LinExpr e1 = LinExpr::of(w.p[t]);
      e1.add(w.pa[t], -1.0);
      m.add_le(e1);
      LinExpr e2 = LinExpr::of(w.p[t], -1.0);
      e2.add(w.pa[t], -1.0);
      m.add_le(e2);
      m.add_soc(LinExpr(w.s_pu), {LinExpr::of(w.pa[t]), LinExpr::of(w.q[t])});
    }
    vv.push_back(w);
  }

  // storage devices
  ThermalCoeffs tc_coef = thermal_coeffs(opts.thermal, kDt);
  const DegradationParams dg;
  std::vector<DeviceVars> dv;
  std::map<int, std::array<int, T>> colocated_mu;  // node -> shared binaries
  for (const StorageDesign& d : designs) {
    if (!d.active(opts.econ)) continue;
    DeviceVars w;
    w.design = d;
    w.rating = make_rating(d, opts.device, opts.econ);
    w.rating.validate();
    w.on_dc = net.is_dc(d.node);
    w.thermal = opts.with_thermal;
    const BessRating& r = w.rating;
    double qr = w.on_dc ? 0.0 : r.q_rate_kvar;
    std::string id = std::to_string(d.node) + (d.kind == StorageKind::Mess ? "m" : "s");

    const std::array<int, T>* shared_mu = nullptr;
    if (d.colocated) {
      auto it = colocated_mu.find(d.node);
      if (it != colocated_mu.end()) shared_mu = &it->second;
    }
    for (int t = 0; t < T; ++t) {
      std::string tag = id + "_" + std::to_string(t);
      w.pdis[t] = m.add_var("pdis_" + tag, 0.0, r.p_rate_kw);
      w.pch[t] = m.add_var("pch_" + tag, -r.p_rate_kw, 0.0);
      w.q[t] = qr > 0 ? m.add_var("qb_" + tag, -qr, qr) : -1;
      if (shared_mu) {
        w.mu[t] = (*shared_mu)[t];
        w.owns_mu = false;
      } else {
        w.mu[t] = m.add_binary("mu_" + tag, 0);
      }
      // exclusivity: discharge only when mu = 1, charge only when mu = 0
      LinExpr ed = LinExpr::of(w.pdis[t]);
      ed.add(w.mu[t], -r.p_rate_kw);
      m.add_le(ed);
      LinExpr ec = LinExpr::of(w.pch[t], -1.0);
      ec.add(w.mu[t], r.p_rate_kw);
      ec -= LinExpr(r.p_rate_kw);
      m.add_le(ec);
      if (w.q[t] >= 0 && d.colocated) {
        // colocated units share the charge/discharge phase; reactive
        // output follows the sign of the shared phase
        LinExpr g1 = LinExpr::of(w.q[t]);
        g1.add(w.mu[t], -qr);
        m.add_le(g1);
        LinExpr g2 = LinExpr::of(w.q[t], -1.0);
        g2.add(w.mu[t], -qr);
        m.add_le(g2);
      }
      if (w.q[t] >= 0) {
        LinExpr pnet = LinExpr::of(w.pdis[t]);
        pnet.add(w.pch[t], 1.0);
        m.add_soc(LinExpr(r.s_pcs_kva), {pnet, LinExpr::of(w.q[t])});
      }
      // battery current surrogate (A^2 per cell)
      double il = 1.0 / (opts.thermal.n_par * opts.thermal.u_bar_kv * r.n_cess);
      double lmax = r.p_rate_kw * std::max(r.eta_c * r.eta_pcs, 1.0 / (r.eta_d * r.eta_pcs)) * il;
      w.ibat2[t] = m.add_var("ib2_" + tag, 0.0, lmax * lmax);
      LinExpr l = LinExpr::of(w.pch[t], -r.eta_c * r.eta_pcs * il);
      l.add(w.pdis[t], il / (r.eta_d * r.eta_pcs));
      m.add_rotated(LinExpr::of(w.ibat2[t]), LinExpr(0.5), {l});
    }
    if (d.colocated && !shared_mu) colocated_mu[d.node] = w.mu;

    // SOC chain
    for (int t = 0; t <= T; ++t) {
      w.soc[t] = m.add_var("soc_" + id + "_" + std::to_string(t), r.soc_min, r.soc_max);
      w.floor[t] = r.soc_min;
    }
    if (opts.mess_floors && d.kind == StorageKind::Mess) {
      double mu_imp = net.bus(d.node).mu_impor;
      if (mu_imp > 0) {
        std::array<double, T> load{};
        for (int t = 0; t < T; ++t) load[t] = series(scen.load_p_kw, d.node, t);
        for (int t = 0; t < T; ++t)
          w.floor[t] = std::max(r.soc_min, mess_min_soc(t, load, r, mu_imp, kDt));
        w.floor[T] = w.floor[0];
        for (int t = 0; t <= T; ++t) {
          // a reserve above the usable band means this fleet cannot
          // back its important load at all: infeasible, not an error
          if (w.floor[t] > r.soc_max) {
            DispatchSolution sol;
            sol.status = conic::SolveStatus::PrimalInfeasible;
            return sol;
          }
          m.set_bounds(w.soc[t], w.floor[t], r.soc_max);
        }
      }
    }
    m.fix(w.soc[0], std::max(r.soc0, w.floor[0]));
    m.fix(w.soc[T], std::max(r.soc0, w.floor[0]));
    for (int t = 0; t < T; ++t) {
      LinExpr e = LinExpr::of(w.soc[t + 1]);
      e.add(w.soc[t], -(1.0 - r.self_discharge));
      e.add(w.pch[t], r.eta_c * r.eta_pcs * kDt / r.e_rate_kwh);
      e.add(w.pdis[t], kDt / (r.e_rate_kwh * r.eta_d * r.eta_pcs));
      m.add_eq(e);
    }

    // container thermal block (per container; containers identical)
    if (w.thermal) {
      const ThermalParams& th = opts.thermal;
      for (int t = 0; t <= T; ++t) {
        w.tc[t] = m.add_var("tc_" + id + "_" + std::to_string(t), th.t_cess_min_k,
                            th.t_cess_max_k);
        w.tbar[t] = m.add_var("tb_" + id + "_" + std::to_string(t), th.t_cess_min_k - 40.0,
                              th.t_cess_max_k + 150.0);
      }
      LinExpr tb0 = LinExpr::of(w.tbar[0]);
      tb0.add(w.tc[0], -1.0);
      m.add_eq(tb0);
      LinExpr per = LinExpr::of(w.tc[T]);
      per.add(w.tc[0], -1.0);
      m.add_eq(per);
      double il = 1.0 / (th.n_par * th.u_bar_kv * r.n_cess);
      for (int t = 0; t < T; ++t) {
        std::string tag = id + "_" + std::to_string(t);
        w.ph[t] = m.add_var("ph_" + tag, 0.0, th.p_air_max_kw);
        w.pc[t] = m.add_var("pcl_" + tag, 0.0, th.p_air_max_kw);
        double text = scen.temp_k[t];
        double kv = tc_coef.k_vent(scen.wind_ms[t], th);
        // generated energy, kWh per container over the hour
        LinExpr egen = LinExpr::of(w.ibat2[t], th.r_int_bat_ohm * th.n_bar / 1000.0 * kDt);
        egen.add(w.pch[t], -r.eta_c * r.eta_pcs * il * th.entropic_v * th.n_bar / 1000.0 * kDt);
        egen.add(w.pdis[t], il / (r.eta_d * r.eta_pcs) * th.entropic_v * th.n_bar / 1000.0 * kDt);
        // surface split: E_gen = (a_rel + a_abs)(Tbar - Tc)
        LinExpr split = LinExpr::of(w.tbar[t + 1], tc_coef.a_rel + tc_coef.a_abs);
        split.add(w.tc[t + 1], -(tc_coef.a_rel + tc_coef.a_abs));
        split -= egen;
        m.add_eq(split);
        // air balance
        LinExpr bal = LinExpr::of(w.tc[t + 1], tc_coef.m_air);
        bal.add(w.tc[t], -tc_coef.m_air);
        bal.add(w.ph[t], -th.cop * kDt);
        bal.add(w.pc[t], th.eer * kDt);
        bal.add(w.tbar[t + 1], -tc_coef.a_rel);
        bal.add(w.tc[t + 1], tc_coef.a_rel);
        bal.add(w.tc[t + 1], tc_coef.a_wall);
        bal += LinExpr(-tc_coef.a_wall * text);
        bal.add(w.tc[t + 1], tc_coef.a_abs);
        bal.add(w.tbar[t], -tc_coef.a_abs);
        if (kv > 0) {
          w.xv[t] = m.add_binary("xv_" + tag, 1);
          w.tx[t] = m.add_var("tx_" + tag, 0.0, th.t_cess_max_k);
          // tx = Tc(t+1) * Xv, exact for a binary Xv
          double tlo = th.t_cess_min_k, thi = th.t_cess_max_k;
          LinExpr m1 = LinExpr::of(w.tx[t]);
          m1.add(w.xv[t], -thi);
          m.add_le(m1);
          LinExpr m2 = LinExpr::of(w.xv[t], tlo);
          m2.add(w.tx[t], -1.0);
          m.add_le(m2);
          LinExpr m3 = LinExpr::of(w.tx[t]);
          m3.add(w.tc[t + 1], -1.0);
          m3.add(w.xv[t], -tlo);
          m3 += LinExpr(tlo);
          m.add_le(m3);
          LinExpr m4 = LinExpr::of(w.tc[t + 1]);
          m4.add(w.tx[t], -1.0);
          m4.add(w.xv[t], -thi);
          m4 += LinExpr(thi);
          m.add_le(m4);
          bal.add(w.xv[t], -kv * text);
          bal.add(w.tx[t], kv);
        } else {
          w.xv[t] = -1;
          w.tx[t] = -1;
        }
        m.add_eq(bal);
      }
    }
    dv.push_back(w);
  }

  // nodal balance rows
  for (const Bus& b : net.buses) {
    for (int t = 0; t < T; ++t) {
      LinExpr pin((series(scen.pv_kw, b.id, t) - series(scen.load_p_kw, b.id, t)) / sb);
      LinExpr qin(-series(scen.load_q_kvar, b.id, t) / sb);
      for (const VscVars& w : vv) {
        if (w.v->ac_bus == b.id) {
          pin.add(w.p[t], 1.0);
          qin.add(w.q[t], 1.0);
        }
        if (w.v->dc_bus == b.id) {
          pin.add(w.p[t], -1.0);
          pin.add(w.pa[t], w.eta);
        }
      }
      for (const DeviceVars& w : dv) {
        if (w.design.node != b.id) continue;
        pin.add(w.pdis[t], 1.0 / sb);
        pin.add(w.pch[t], 1.0 / sb);
        if (w.q[t] >= 0) qin.add(w.q[t], 1.0 / sb);
      }
      if (sp.count(b.id)) {
        pin.add(sp[b.id][t], 1.0);
        qin.add(sq[b.id][t], 1.0);
      }
      // parent inflow minus downstream sends
      LinExpr prow = pin, qrow = qin;
      auto pit = tp.in.find(b.id);
      if (pit != tp.in.end()) {
        const OrientedBranch& ob = tp.br[pit->second];
        prow.add(bp[pit->second][t], 1.0);
        prow.add(bi2[pit->second][t], -ob.r_pu);
        if (!ob.dc) {
          qrow.add(bq[pit->second][t], 1.0);
          qrow.add(bi2[pit->second][t], -ob.x_pu);
        }
      }
      auto oit = tp.out.find(b.id);
      if (oit != tp.out.end())
        for (size_t k : oit->second) {
          prow.add(bp[k][t], -1.0);
          if (!tp.br[k].dc) qrow.add(bq[k][t], -1.0);
        }
      m.add_eq(prow);
      if (b.kind == BusKind::Ac) m.add_eq(qrow);
    }
  }

  // voltage drop and the relaxed current definition
  for (size_t k = 0; k < tp.br.size(); ++k) {
    const OrientedBranch& ob = tp.br[k];
    for (int t = 0; t < T; ++t) {
      LinExpr drop = LinExpr::of(v2[ob.to][t]);
      drop.add(v2[ob.from][t], -1.0);
      drop.add(bp[k][t], 2.0 * ob.r_pu);
      drop.add(bi2[k][t], -(ob.r_pu * ob.r_pu + ob.x_pu * ob.x_pu));
      if (!ob.dc) drop.add(bq[k][t], 2.0 * ob.x_pu);
      m.add_eq(drop);
      std::vector<LinExpr> flows{LinExpr::of(bp[k][t])};
      if (!ob.dc) flows.push_back(LinExpr::of(bq[k][t]));
      m.add_rotated(LinExpr::of(bi2[k][t]), LinExpr::of(v2[ob.from][t], 0.5), flows);
    }
  }

  // objective: lambda1 * C_loss + lambda2 * (C_var + C_com - B_arb)
  const EconParams& ec = opts.econ;
  const ThermalParams& th = opts.thermal;
  LinExpr obj;
  for (int t = 0; t < T; ++t) {
    double pr = scen.price[t];
    for (size_t k = 0; k < tp.br.size(); ++k)
      obj.add(bi2[k][t], ec.lambda1 * tp.br[k].r_pu * sb * pr * kDt);
    for (const VscVars& w : vv) obj.add(w.pa[t], ec.lambda1 * w.eta * sb * pr * kDt);
    for (const DeviceVars& w : dv) {
      double nc = w.rating.n_cess;
      if (w.thermal) {
        obj.add(w.ph[t], ec.lambda2 * nc * pr * kDt);
        obj.add(w.pc[t], ec.lambda2 * nc * pr * kDt);
      }
      obj.add(w.ibat2[t], ec.lambda2 * nc * pr * th.r_int_bat_ohm * th.n_bar / 1000.0 * kDt);
      obj.add(w.pdis[t], -ec.lambda2 * pr * kDt);
      obj.add(w.pch[t], -ec.lambda2 * pr * kDt);
    }
  }
  for (const DeviceVars& w : dv) {
    double comp = ec.lambda2 * ec.c_e * w.rating.e_rate_kwh / dg.eol_fade;
    obj += LinExpr(comp * dg.lin_idle_icept);
    for (int t = 1; t <= T; ++t) obj.add(w.soc[t], comp * dg.lin_idle_slope / T);
    double ddod = 0.5 * dg.lin_cycle_slope * kDt /
                  (w.rating.e_rate_kwh * w.rating.eta_d * w.rating.eta_pcs);
    for (int t = 0; t < T; ++t) obj.add(w.pdis[t], comp * ddod);
  }
  for (int s : penalty_slacks) obj.add(s, opts.penalty_per_pu);
  m.minimize(obj);

  conic::MipResult mr = conic::solve_misocp(m, opts.mip);

  DispatchSolution sol;
  sol.status = mr.status;
  sol.nodes_explored = mr.nodes_explored;
  // a limit hit without an incumbent reports MaxIterations with no values
  if ((mr.status != conic::SolveStatus::Optimal &&
       mr.status != conic::SolveStatus::MaxIterations) ||
      mr.values.empty())
    return sol;
  const std::vector<double>& x = mr.values;

  for (const Bus& b : net.buses)
    for (int t = 0; t < T; ++t) sol.v2_pu[b.id][t] = x[v2[b.id][t]];
  for (size_t k = 0; k < tp.br.size(); ++k) {
    BranchFlow f;
    f.from = tp.br[k].from;
    f.to = tp.br[k].to;
    f.dc = tp.br[k].dc;
    f.r_pu = tp.br[k].r_pu;
    f.x_pu = tp.br[k].x_pu;
    for (int t = 0; t < T; ++t) {
      f.p_pu[t] = x[bp[k][t]];
      f.q_pu[t] = tp.br[k].dc ? 0.0 : x[bq[k][t]];
      f.i2_pu[t] = x[bi2[k][t]];
    }
    sol.branches.push_back(f);
  }
  for (const VscVars& w : vv) {
    VscFlow f;
    f.ac_bus = w.v->ac_bus;
    f.dc_bus = w.v->dc_bus;
    for (int t = 0; t < T; ++t) {
      f.p_ac_pu[t] = x[w.p[t]];
      f.q_pu[t] = x[w.q[t]];
      f.p_abs_pu[t] = x[w.pa[t]];
    }
    sol.vscs.push_back(f);
  }

  double c_loss = 0, c_var = 0, c_com = 0, b_arb = 0, penalty = 0;
  for (int t = 0; t < T; ++t) {
    double pr = scen.price[t];
    for (const BranchFlow& f : sol.branches) c_loss += f.r_pu * f.i2_pu[t] * sb * pr * kDt;
    for (size_t h = 0; h < vv.size(); ++h)
      c_loss += vv[h].eta * sol.vscs[h].p_abs_pu[t] * sb * pr * kDt;
  }
  for (const DeviceVars& w : dv) {
    DeviceDispatch d;
    d.design = w.design;
    d.rating = w.rating;
    double soc_sum = 0;
    for (int t = 0; t < T; ++t) {
      d.p_dis_kw[t] = x[w.pdis[t]];
      d.p_ch_kw[t] = x[w.pch[t]];
      d.q_kvar[t] = w.q[t] >= 0 ? x[w.q[t]] : 0.0;
      d.i_bat2_a2[t] = x[w.ibat2[t]];
      d.mu_dis[t] = x[w.mu[t]] > 0.5 ? 1 : 0;
      if (w.thermal) {
        d.p_hot_kw[t] = x[w.ph[t]];
        d.p_cool_kw[t] = x[w.pc[t]];
        d.x_air[t] = d.p_hot_kw[t] > d.p_cool_kw[t] ? 1 : 0;
        d.x_vent[t] = w.xv[t] >= 0 && x[w.xv[t]] > 0.5 ? 1 : 0;
      }
      double pr = scen.price[t];
      double nc = w.rating.n_cess;
      if (w.thermal) c_var += nc * (d.p_hot_kw[t] + d.p_cool_kw[t]) * pr * kDt;
      c_var += nc * d.i_bat2_a2[t] * th.r_int_bat_ohm * th.n_bar / 1000.0 * pr * kDt;
      b_arb += (d.p_dis_kw[t] + d.p_ch_kw[t]) * pr * kDt;
    }
    for (int t = 0; t <= T; ++t) {
      d.soc[t] = x[w.soc[t]];
      d.soc_floor[t] = w.floor[t];
      if (t >= 1) soc_sum += d.soc[t];
      if (w.thermal) {
        d.t_cess_k[t] = x[w.tc[t]];
        d.t_bar_k[t] = x[w.tbar[t]];
      }
    }
    std::vector<double> dods;
    for (int t = 0; t < T; ++t)
      dods.push_back(d.p_dis_kw[t] * kDt /
                     (w.rating.e_rate_kwh * w.rating.eta_d * w.rating.eta_pcs));
    double zeta = dg.lin_idle_slope * (soc_sum / T) + dg.lin_idle_icept;
    double cyc = 0;
    for (double dd : dods) cyc += dg.lin_cycle_slope * dd;
    zeta += 0.5 * cyc;
    c_com += zeta / dg.eol_fade * ec.c_e * w.rating.e_rate_kwh;
    sol.devices.push_back(d);
  }
  for (int s : penalty_slacks) penalty += x[s];

  sol.c_loss = c_loss;
  sol.c_var = c_var;
  sol.c_com = c_com;
  sol.b_arb = b_arb;
  sol.objective = mr.objective;
  sol.socr_gap = socr_gap(sol);

  if (opts.penalty_relaxed) {
    int viol = 0;
    const double tol = 1e-6;
    for (const Bus& b : net.buses) {
      double lo = b.v_min * b.v_min, hi = b.v_max * b.v_max;
      for (int t = 0; t < T; ++t) {
        double v = sol.v2_pu[b.id][t];
        if (v < lo - tol || v > hi + tol) ++viol;
      }
    }
    for (size_t k = 0; k < tp.br.size(); ++k)
      for (int t = 0; t < T; ++t)
        if (sol.branches[k].i2_pu[t] > tp.br[k].i2_max_pu + tol) ++viol;
    sol.violations = viol;
  }
  return sol;
}

DispatchSolution baseline_dispatch(const HybridNetwork& net, const Scenario& scen,
                                   const DispatchOptions& opts) {
  return solve_dispatch(net, scen, {}, opts);
}

double socr_gap(const DispatchSolution& sol) {
  double worst = 0.0;
  for (const BranchFlow& f : sol.branches) {
    auto vit = sol.v2_pu.find(f.from);
    if (vit == sol.v2_pu.end()) continue;
    for (int t = 0; t < T; ++t) {
      double v = vit->second[t];
      if (v <= 0) continue;
      double rhs = (f.p_pu[t] * f.p_pu[t] + f.q_pu[t] * f.q_pu[t]) / v;
      worst = std::max(worst, std::abs(f.i2_pu[t] - rhs));
    }
  }
  return worst;
}

}  // namespace gridstor
