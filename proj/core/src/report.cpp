#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "gridstor/pipeline.hpp"

// CSV report bundle.  Every value is copied straight out of the
// PlanResult (voltages are the square roots of the stored squared
// magnitudes); nothing is re-solved here.

namespace gridstor {

namespace {

std::ofstream open_csv(const std::filesystem::path& dir, const std::string& name) {
  std::ofstream out(dir / name);
  if (!out) throw ValidationError("cannot write report file: " + (dir / name).string());
  out.precision(10);
  return out;
}

std::string slug(const std::string& id) {
  std::string s;
  for (char c : id) s += std::isalnum(static_cast<unsigned char>(c)) ? c : '_';
  return s;
}

std::string device_tag(const DeviceDispatch& d) {
  return (d.design.kind == StorageKind::Sess ? "sess" : "mess") + std::to_string(d.design.node);
}

void write_cost_rows(std::ofstream& out, const CostReport& c, bool stage2) {
  out << "component,usd\n";
  if (stage2) {
    out << "c_rent," << c.c_rent << "\n";
  } else {
    out << "c_cap," << c.c_cap << "\n";
    out << "c_rep," << c.c_rep << "\n";
    out << "c_dis," << c.c_dis << "\n";
  }
  out << "c_fix," << c.c_fix << "\n";
  out << "c_var," << c.c_var << "\n";
  out << "b_arb," << c.b_arb << "\n";
  out << "b_loss," << c.b_loss << "\n";
  out << "penalty," << c.penalty << "\n";
  out << "net," << c.net() << "\n";
}

void write_trace(const std::filesystem::path& dir, const std::string& name,
                 const std::vector<GenerationStat>& trace) {
  std::ofstream out = open_csv(dir, name);
  out << "generation,best,mean,temperature\n";
  for (const GenerationStat& g : trace)
    out << g.generation << ',' << g.best << ',' << g.mean << ',' << g.temperature << "\n";
}

void write_scenario_series(const std::filesystem::path& dir, const ScenarioOutcome& o) {
  const std::string tag = slug(o.id);
  const DispatchSolution& sol = o.solution;

  {
    std::ofstream out = open_csv(dir, "voltages_" + tag + ".csv");
    out << "hour";
    for (const auto& [bus, series] : sol.v2_pu) out << ",bus_" << bus;
    out << "\n";
    for (int t = 0; t < kHoursPerDay; ++t) {
      out << t;
      for (const auto& [bus, series] : sol.v2_pu) out << ',' << std::sqrt(series[t]);
      out << "\n";
    }
  }
  {
    std::ofstream out = open_csv(dir, "soc_" + tag + ".csv");
    out << "hour";
    for (const DeviceDispatch& d : sol.devices)
      out << ',' << device_tag(d) << ",floor_" << device_tag(d);
    out << "\n";
    for (int t = 0; t <= kHoursPerDay; ++t) {
      out << t;
      for (const DeviceDispatch& d : sol.devices) out << ',' << d.soc[t] << ',' << d.soc_floor[t];
      out << "\n";
    }
  }
  {
    std::ofstream out = open_csv(dir, "hvac_" + tag + ".csv");
    out << "hour";
    for (const DeviceDispatch& d : sol.devices)
      out << ",heat_" << device_tag(d) << ",cool_" << device_tag(d);
    out << "\n";
    for (int t = 0; t < kHoursPerDay; ++t) {
      out << t;
      for (const DeviceDispatch& d : sol.devices)
        out << ',' << d.p_hot_kw[t] << ',' << d.p_cool_kw[t];
      out << "\n";
    }
  }
  {
    std::ofstream out = open_csv(dir, "temps_" + tag + ".csv");
    out << "hour";
    for (const DeviceDispatch& d : sol.devices)
      out << ",air_" << device_tag(d) << ",cell_" << device_tag(d);
    out << "\n";
    for (int t = 0; t <= kHoursPerDay; ++t) {
      out << t;
      for (const DeviceDispatch& d : sol.devices)
        out << ',' << d.t_cess_k[t] << ',' << d.t_bar_k[t];
      out << "\n";
    }
  }
}

}  // namespace

void report(const PlanResult& plan, const std::string& out_dir) {
  std::filesystem::path dir(out_dir);
  std::filesystem::create_directories(dir);

  {
    std::ofstream out = open_csv(dir, "design.csv");
    out << "node,kind,e_rate_kwh,p_rate_kw,soc0,q_enable,n_modules,lifetime_years\n";
    for (size_t i = 0; i < plan.sess.size(); ++i) {
      const StorageDesign& d = plan.sess[i];
      out << d.node << ",sess," << d.e_rate_kwh << ',' << d.p_rate_kw << ',' << d.soc0 << ','
          << (d.q_enable ? 1 : 0) << ",0,";
      if (i < plan.sess_lifetime_years.size()) out << plan.sess_lifetime_years[i];
      out << "\n";
    }
    for (const StorageDesign& d : plan.mess)
      out << d.node << ",mess,0,0," << d.soc0 << ",0," << d.n_modules << ",\n";
  }
  {
    std::ofstream out = open_csv(dir, "lcc.csv");
    write_cost_rows(out, plan.stage1_cost, false);
  }
  {
    std::ofstream out = open_csv(dir, "event.csv");
    write_cost_rows(out, plan.stage2_cost, true);
  }
  {
    std::ofstream out = open_csv(dir, "violations.csv");
    out << "scenario,days,stage,baseline,sess_only,final\n";
    for (const ScenarioOutcome& o : plan.outcomes)
      out << o.id << ',' << o.days << ','
          << (o.stage == StageTag::Stage2 ? "stage2" : "stage1") << ','
          << o.violations_baseline << ',' << o.violations_sess << ',' << o.violations_final
          << "\n";
  }
  write_trace(dir, "trace_stage1.csv", plan.stage1_trace);
  write_trace(dir, "trace_stage2.csv", plan.stage2_trace);
  for (const ScenarioOutcome& o : plan.outcomes) write_scenario_series(dir, o);
}

}  // namespace gridstor
