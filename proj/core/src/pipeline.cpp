#include "gridstor/pipeline.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

namespace gridstor {

namespace {

using nlohmann::json;

// Pull a field only when the document provides it, so configs may
// override any subset of the defaults.
template <typename T>
void maybe(const json& j, const char* key, T& out) {
  if (j.contains(key)) j.at(key).get_to(out);
}

std::string resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty()) return p;
  std::filesystem::path q(p);
  return q.is_absolute() ? q.string() : (base / q).string();
}

void parse_econ(const json& j, EconParams& p) {
  maybe(j, "c_e", p.c_e);
  maybe(j, "c_p", p.c_p);
  maybe(j, "c_b", p.c_b);
  maybe(j, "c_f", p.c_f);
  maybe(j, "c_d", p.c_d);
  maybe(j, "c_rent", p.c_rent);
  maybe(j, "tau", p.tau);
  maybe(j, "years", p.years);
  maybe(j, "alpha", p.alpha);
  maybe(j, "pcs_life_years", p.pcs_life_years);
  maybe(j, "budget", p.budget);
  maybe(j, "lambda1", p.lambda1);
  maybe(j, "lambda2", p.lambda2);
  maybe(j, "gap_max", p.gap_max);
  maybe(j, "c_pun", p.c_pun);
  maybe(j, "t_rent_days", p.t_rent_days);
  maybe(j, "e_rate_mess_kwh", p.e_rate_mess_kwh);
  maybe(j, "p_rate_mess_kw", p.p_rate_mess_kw);
}

void parse_thermal(const json& j, ThermalParams& p) {
  maybe(j, "r_int_bat_ohm", p.r_int_bat_ohm);
  maybe(j, "n_bar", p.n_bar);
  maybe(j, "n_par", p.n_par);
  maybe(j, "u_bar_kv", p.u_bar_kv);
  maybe(j, "a_bar_m2", p.a_bar_m2);
  maybe(j, "h_trans", p.h_trans);
  maybe(j, "c_spe_bat", p.c_spe_bat);
  maybe(j, "m_bat_kg", p.m_bat_kg);
  maybe(j, "c_spe_air", p.c_spe_air);
  maybe(j, "m_air_kg", p.m_air_kg);
  maybe(j, "cop", p.cop);
  maybe(j, "eer", p.eer);
  maybe(j, "rho_air", p.rho_air);
  maybe(j, "k_wall", p.k_wall);
  maybe(j, "a_wall_m2", p.a_wall_m2);
  maybe(j, "a_vent_m2", p.a_vent_m2);
  maybe(j, "c_flo_sqrt_c_wind", p.c_flo_sqrt_c_wind);
  maybe(j, "entropic_v", p.entropic_v);
  maybe(j, "t_cess_min_k", p.t_cess_min_k);
  maybe(j, "t_cess_max_k", p.t_cess_max_k);
  maybe(j, "p_air_max_kw", p.p_air_max_kw);
}

void parse_device(const json& j, DeviceParams& p) {
  maybe(j, "eta_c", p.eta_c);
  maybe(j, "eta_d", p.eta_d);
  maybe(j, "eta_pcs", p.eta_pcs);
  maybe(j, "soc_min", p.soc_min);
  maybe(j, "soc_max", p.soc_max);
  maybe(j, "self_discharge", p.self_discharge);
}

void parse_search(const json& j, SearchConfig& c) {
  maybe(j, "population", c.population);
  maybe(j, "generations", c.generations);
  maybe(j, "crossover", c.crossover);
  maybe(j, "mutation", c.mutation);
  maybe(j, "elitism", c.elitism);
  maybe(j, "sa_t0_frac", c.sa_t0_frac);
  maybe(j, "sa_cooling", c.sa_cooling);
  maybe(j, "seed", c.seed);
  maybe(j, "jobs", c.jobs);
}

StorageKind parse_kind(const std::string& s) {
  if (s == "sess") return StorageKind::Sess;
  if (s == "mess") return StorageKind::Mess;
  throw ValidationError("storage kind must be 'sess' or 'mess', got '" + s + "'");
}

StorageDesign parse_design(const json& j) {
  StorageDesign d;
  d.node = j.at("node").get<int>();
  d.kind = parse_kind(j.value("kind", std::string("sess")));
  maybe(j, "e_rate_kwh", d.e_rate_kwh);
  maybe(j, "p_rate_kw", d.p_rate_kw);
  maybe(j, "soc0", d.soc0);
  maybe(j, "q_enable", d.q_enable);
  maybe(j, "n_modules", d.n_modules);
  maybe(j, "n_cess", d.n_cess);
  maybe(j, "colocated", d.colocated);
  return d;
}

json design_json(const StorageDesign& d) {
  return json{{"node", d.node},
              {"kind", d.kind == StorageKind::Sess ? "sess" : "mess"},
              {"e_rate_kwh", d.e_rate_kwh},
              {"p_rate_kw", d.p_rate_kw},
              {"soc0", d.soc0},
              {"q_enable", d.q_enable},
              {"n_modules", d.n_modules},
              {"n_cess", d.n_cess},
              {"colocated", d.colocated}};
}

json cost_json(const CostReport& c) {
  return json{{"c_cap", c.c_cap},   {"c_rep", c.c_rep},   {"c_fix", c.c_fix},
              {"c_var", c.c_var},   {"c_dis", c.c_dis},   {"c_rent", c.c_rent},
              {"b_arb", c.b_arb},   {"b_loss", c.b_loss}, {"c_com", c.c_com},
              {"penalty", c.penalty}};
}

CostReport parse_cost(const json& j) {
  CostReport c;
  maybe(j, "c_cap", c.c_cap);
  maybe(j, "c_rep", c.c_rep);
  maybe(j, "c_fix", c.c_fix);
  maybe(j, "c_var", c.c_var);
  maybe(j, "c_dis", c.c_dis);
  maybe(j, "c_rent", c.c_rent);
  maybe(j, "b_arb", c.b_arb);
  maybe(j, "b_loss", c.b_loss);
  maybe(j, "c_com", c.c_com);
  maybe(j, "penalty", c.penalty);
  return c;
}

json trace_json(const std::vector<GenerationStat>& t) {
  json out = json::array();
  for (const GenerationStat& g : t)
    out.push_back({{"generation", g.generation},
                   {"best", g.best},
                   {"mean", g.mean},
                   {"temperature", g.temperature}});
  return out;
}

std::vector<GenerationStat> parse_trace(const json& j) {
  std::vector<GenerationStat> out;
  for (const json& e : j) {
    GenerationStat g;
    g.generation = e.at("generation").get<int>();
    g.best = e.at("best").get<double>();
    g.mean = e.at("mean").get<double>();
    g.temperature = e.at("temperature").get<double>();
    out.push_back(g);
  }
  return out;
}

template <typename A>
json arr_json(const A& a) {
  json out = json::array();
  for (double v : a) out.push_back(v);
  return out;
}

template <typename A>
json iarr_json(const A& a) {
  json out = json::array();
  for (int v : a) out.push_back(v);
  return out;
}

template <typename A>
void parse_arr(const json& j, A& a) {
  if (j.size() != a.size())
    throw ValidationError("plan document: series length " + std::to_string(j.size()) +
                          ", expected " + std::to_string(a.size()));
  for (size_t i = 0; i < a.size(); ++i) a[i] = j[i];
}

json device_json(const DeviceDispatch& d) {
  json r{{"e_rate_kwh", d.rating.e_rate_kwh},  {"p_rate_kw", d.rating.p_rate_kw},
         {"q_rate_kvar", d.rating.q_rate_kvar}, {"s_pcs_kva", d.rating.s_pcs_kva},
         {"soc_min", d.rating.soc_min},         {"soc_max", d.rating.soc_max},
         {"soc0", d.rating.soc0},               {"eta_c", d.rating.eta_c},
         {"eta_d", d.rating.eta_d},             {"eta_pcs", d.rating.eta_pcs},
         {"n_cess", d.rating.n_cess}};
  return json{{"design", design_json(d.design)},
              {"rating", r},
              {"p_dis_kw", arr_json(d.p_dis_kw)},
              {"p_ch_kw", arr_json(d.p_ch_kw)},
              {"q_kvar", arr_json(d.q_kvar)},
              {"i_bat2_a2", arr_json(d.i_bat2_a2)},
              {"soc", arr_json(d.soc)},
              {"p_hot_kw", arr_json(d.p_hot_kw)},
              {"p_cool_kw", arr_json(d.p_cool_kw)},
              {"mu_dis", iarr_json(d.mu_dis)},
              {"x_air", iarr_json(d.x_air)},
              {"x_vent", iarr_json(d.x_vent)},
              {"t_cess_k", arr_json(d.t_cess_k)},
              {"t_bar_k", arr_json(d.t_bar_k)},
              {"soc_floor", arr_json(d.soc_floor)}};
}

DeviceDispatch parse_device_dispatch(const json& j) {
  DeviceDispatch d;
  d.design = parse_design(j.at("design"));
  const json& r = j.at("rating");
  d.rating.e_rate_kwh = r.at("e_rate_kwh");
  d.rating.p_rate_kw = r.at("p_rate_kw");
  d.rating.q_rate_kvar = r.at("q_rate_kvar");
  d.rating.s_pcs_kva = r.at("s_pcs_kva");
  d.rating.soc_min = r.at("soc_min");
  d.rating.soc_max = r.at("soc_max");
  d.rating.soc0 = r.at("soc0");
  d.rating.eta_c = r.at("eta_c");
  d.rating.eta_d = r.at("eta_d");
  d.rating.eta_pcs = r.at("eta_pcs");
  d.rating.n_cess = r.at("n_cess");
  parse_arr(j.at("p_dis_kw"), d.p_dis_kw);
  parse_arr(j.at("p_ch_kw"), d.p_ch_kw);
  parse_arr(j.at("q_kvar"), d.q_kvar);
  parse_arr(j.at("i_bat2_a2"), d.i_bat2_a2);
  parse_arr(j.at("soc"), d.soc);
  parse_arr(j.at("p_hot_kw"), d.p_hot_kw);
  parse_arr(j.at("p_cool_kw"), d.p_cool_kw);
  parse_arr(j.at("mu_dis"), d.mu_dis);
  parse_arr(j.at("x_air"), d.x_air);
  parse_arr(j.at("x_vent"), d.x_vent);
  parse_arr(j.at("t_cess_k"), d.t_cess_k);
  parse_arr(j.at("t_bar_k"), d.t_bar_k);
  parse_arr(j.at("soc_floor"), d.soc_floor);
  return d;
}

json solution_json(const DispatchSolution& s) {
  json v2 = json::object();
  for (const auto& [bus, series] : s.v2_pu) v2[std::to_string(bus)] = arr_json(series);
  json branches = json::array();
  for (const BranchFlow& b : s.branches)
    branches.push_back({{"from", b.from},
                        {"to", b.to},
                        {"dc", b.dc},
                        {"r_pu", b.r_pu},
                        {"x_pu", b.x_pu},
                        {"p_pu", arr_json(b.p_pu)},
                        {"q_pu", arr_json(b.q_pu)},
                        {"i2_pu", arr_json(b.i2_pu)}});
  json vscs = json::array();
  for (const VscFlow& v : s.vscs)
    vscs.push_back({{"ac_bus", v.ac_bus},
                    {"dc_bus", v.dc_bus},
                    {"p_ac_pu", arr_json(v.p_ac_pu)},
                    {"q_pu", arr_json(v.q_pu)},
                    {"p_abs_pu", arr_json(v.p_abs_pu)}});
  json devices = json::array();
  for (const DeviceDispatch& d : s.devices) devices.push_back(device_json(d));
  return json{{"status", static_cast<int>(s.status)},
              {"objective", s.objective},
              {"c_loss", s.c_loss},
              {"c_var", s.c_var},
              {"c_com", s.c_com},
              {"b_arb", s.b_arb},
              {"socr_gap", s.socr_gap},
              {"violations", s.violations},
              {"nodes_explored", s.nodes_explored},
              {"v2_pu", v2},
              {"branches", branches},
              {"vscs", vscs},
              {"devices", devices}};
}

DispatchSolution parse_solution(const json& j) {
  DispatchSolution s;
  s.status = static_cast<conic::SolveStatus>(j.at("status").get<int>());
  s.objective = j.at("objective");
  s.c_loss = j.at("c_loss");
  s.c_var = j.at("c_var");
  s.c_com = j.at("c_com");
  s.b_arb = j.at("b_arb");
  s.socr_gap = j.at("socr_gap");
  s.violations = j.at("violations");
  s.nodes_explored = j.at("nodes_explored");
  for (const auto& [bus, series] : j.at("v2_pu").items()) {
    std::array<double, kHoursPerDay> a{};
    parse_arr(series, a);
    s.v2_pu[std::stoi(bus)] = a;
  }
  for (const json& e : j.at("branches")) {
    BranchFlow b;
    b.from = e.at("from");
    b.to = e.at("to");
    b.dc = e.at("dc");
    b.r_pu = e.at("r_pu");
    b.x_pu = e.at("x_pu");
    parse_arr(e.at("p_pu"), b.p_pu);
    parse_arr(e.at("q_pu"), b.q_pu);
    parse_arr(e.at("i2_pu"), b.i2_pu);
    s.branches.push_back(b);
  }
  for (const json& e : j.at("vscs")) {
    VscFlow v;
    v.ac_bus = e.at("ac_bus");
    v.dc_bus = e.at("dc_bus");
    parse_arr(e.at("p_ac_pu"), v.p_ac_pu);
    parse_arr(e.at("q_pu"), v.q_pu);
    parse_arr(e.at("p_abs_pu"), v.p_abs_pu);
    s.vscs.push_back(v);
  }
  for (const json& e : j.at("devices")) s.devices.push_back(parse_device_dispatch(e));
  return s;
}

// Violation accounting is always done on the softened model so the
// count exists even when the strict model has no feasible point.
int count_violations(const HybridNetwork& net, const Scenario& s,
                     const std::vector<StorageDesign>& designs, DispatchOptions opts) {
  opts.penalty_relaxed = true;
  DispatchSolution sol = solve_dispatch(net, s, designs, opts);
  if (sol.status != conic::SolveStatus::Optimal)
    throw InfeasibleError("penalty-relaxed dispatch failed for scenario " + s.id);
  return sol.violations;
}

std::vector<Scenario> stage_scenarios(const std::vector<Scenario>& all, StageTag tag) {
  std::vector<Scenario> out;
  for (const Scenario& s : all)
    if (s.stage == tag) out.push_back(s);
  return out;
}

const Scenario& find_scenario(const std::vector<Scenario>& all, const std::string& id) {
  for (const Scenario& s : all)
    if (s.id == id) return s;
  throw ValidationError("plan references unknown scenario '" + id + "'");
}

}  // namespace

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ValidationError(std::string("config parse error: ") + e.what());
  }
  std::filesystem::path base = std::filesystem::path(path).parent_path();

  RunConfig cfg;
  cfg.network_path = resolve(base, j.at("network").get<std::string>());
  for (const json& s : j.at("scenarios"))
    cfg.scenario_paths.push_back(resolve(base, s.get<std::string>()));
  if (j.contains("tariff")) cfg.tariff_path = resolve(base, j.at("tariff").get<std::string>());
  if (j.contains("out")) cfg.out_dir = resolve(base, j.at("out").get<std::string>());

  if (j.contains("econ")) parse_econ(j.at("econ"), cfg.dispatch.econ);
  if (j.contains("thermal")) parse_thermal(j.at("thermal"), cfg.dispatch.thermal);
  if (j.contains("device")) parse_device(j.at("device"), cfg.dispatch.device);
  if (j.contains("search")) parse_search(j.at("search"), cfg.search);
  if (j.contains("dispatch")) {
    const json& d = j.at("dispatch");
    maybe(d, "with_thermal", cfg.dispatch.with_thermal);
    maybe(d, "penalty_relaxed", cfg.dispatch.penalty_relaxed);
    maybe(d, "penalty_per_pu", cfg.dispatch.penalty_per_pu);
    maybe(d, "slack_import_limit_pu", cfg.dispatch.slack_import_limit_pu);
    maybe(d, "mess_floors", cfg.dispatch.mess_floors);
    maybe(d, "mip_rel_gap", cfg.dispatch.mip.rel_gap);
    maybe(d, "mip_abs_gap", cfg.dispatch.mip.abs_gap);
    maybe(d, "mip_max_nodes", cfg.dispatch.mip.max_nodes);
    maybe(d, "time_limit_s", cfg.dispatch.mip.time_limit_s);
  }
  if (j.contains("designs"))
    for (const json& d : j.at("designs")) cfg.fixed_designs.push_back(parse_design(d));

  cfg.validate();
  return cfg;
}

void RunConfig::validate() const {
  if (network_path.empty()) throw ValidationError("config: network path missing");
  if (!std::filesystem::exists(network_path))
    throw ValidationError("config: network file not found: " + network_path);
  if (scenario_paths.empty()) throw ValidationError("config: at least one scenario required");
  for (const std::string& p : scenario_paths)
    if (!std::filesystem::exists(p))
      throw ValidationError("config: scenario file not found: " + p);
  if (!tariff_path.empty() && !std::filesystem::exists(tariff_path))
    throw ValidationError("config: tariff file not found: " + tariff_path);
  dispatch.econ.validate();
  dispatch.thermal.validate();
  search.validate();
}

RunInputs load_inputs(const RunConfig& cfg) {
  RunInputs in;
  in.net = load_network(cfg.network_path);
  Tariff tariff = cfg.tariff_path.empty() ? default_tariff() : load_tariff(cfg.tariff_path);
  for (const std::string& p : cfg.scenario_paths) {
    Scenario s = load_scenario(p);
    bool priced = false;
    for (double v : s.price) priced = priced || v != 0.0;
    if (!priced)
      for (int h = 0; h < kHoursPerDay; ++h) s.price[h] = tariff.price_at(h);
    validate_scenario(s, in.net);
    in.scenarios.push_back(std::move(s));
  }
  return in;
}

PlanResult run_stage1(const RunConfig& cfg) {
  RunInputs in = load_inputs(cfg);
  std::vector<Scenario> s1 = stage_scenarios(in.scenarios, StageTag::Stage1);
  if (s1.empty()) throw ValidationError("stage 1 needs at least one stage1 scenario");

  SearchContext ctx = SearchContext::make(in.net, s1, cfg.dispatch);
  StageSearchOutcome out = search_stage1(ctx, cfg.search);
  if (out.search.best_fitness >= kInfeasibleFitness)
    throw NoIncumbentError("stage 1: no candidate fleet dispatched feasibly within budget");

  Stage1Evaluation ev = evaluate_stage1(out.stage1, ctx);
  if (!ev.feasible)
    throw InfeasibleError("stage 1: incumbent failed re-evaluation");

  PlanResult plan;
  plan.seed = cfg.search.seed;
  plan.sess = ev.active;
  plan.sess_lifetime_years = ev.lifetime_years;
  plan.stage1_cost = ev.cost;
  plan.stage1_fitness = out.search.best_fitness;
  plan.stage1_trace = out.search.trace;
  for (const Scenario& s : s1) {
    ScenarioOutcome o;
    o.id = s.id;
    o.days = s.days;
    o.stage = StageTag::Stage1;
    o.violations_baseline = ctx.baseline_violations.at(s.id);
    o.violations_sess = count_violations(in.net, s, plan.sess, cfg.dispatch);
    o.violations_final = o.violations_sess;
    o.solution = ev.solutions.at(s.id);
    plan.outcomes.push_back(std::move(o));
  }
  return plan;
}

PlanResult dispatch_fixed(const RunConfig& cfg) {
  RunInputs in = load_inputs(cfg);
  PlanResult plan;
  plan.seed = cfg.search.seed;
  for (const StorageDesign& d : cfg.fixed_designs)
    (d.kind == StorageKind::Sess ? plan.sess : plan.mess).push_back(d);

  std::vector<StorageDesign> joint = plan.sess;
  joint.insert(joint.end(), plan.mess.begin(), plan.mess.end());
  for (const Scenario& s : in.scenarios) {
    DispatchSolution sol = solve_dispatch(in.net, s, joint, cfg.dispatch);
    if (sol.status != conic::SolveStatus::Optimal)
      throw InfeasibleError("dispatch failed for scenario " + s.id);
    ScenarioOutcome o;
    o.id = s.id;
    o.days = s.days;
    o.stage = s.stage;
    o.violations_baseline = count_violations(in.net, s, {}, cfg.dispatch);
    o.violations_sess = count_violations(in.net, s, plan.sess, cfg.dispatch);
    o.violations_final = count_violations(in.net, s, joint, cfg.dispatch);
    o.solution = std::move(sol);
    plan.outcomes.push_back(std::move(o));
  }
  return plan;
}

PlanResult run_stage2(const RunConfig& cfg, PlanResult stage1) {
  RunInputs in = load_inputs(cfg);
  std::vector<Scenario> s2 = stage_scenarios(in.scenarios, StageTag::Stage2);
  if (s2.empty()) throw ValidationError("stage 2 needs at least one stage2 scenario");

  SearchContext ctx = SearchContext::make(in.net, s2, cfg.dispatch);
  StageSearchOutcome out = search_stage2(ctx, stage1.sess, cfg.search);
  if (out.search.best_fitness >= kInfeasibleFitness)
    throw NoIncumbentError("stage 2: no rentable fleet clears the event within budget");

  Stage2Evaluation ev = evaluate_stage2(out.stage2, stage1.sess, ctx);
  if (!ev.feasible)
    throw InfeasibleError("stage 2: incumbent failed re-evaluation");

  PlanResult plan = std::move(stage1);
  for (const StorageDesign& d : designs_stage2(out.stage2, in.net))
    if (d.n_modules > 0) plan.mess.push_back(d);
  plan.stage2_cost = ev.cost;
  plan.stage2_fitness = out.search.best_fitness;
  plan.stage2_trace = out.search.trace;

  std::vector<StorageDesign> joint = plan.sess;
  joint.insert(joint.end(), plan.mess.begin(), plan.mess.end());
  for (const Scenario& s : s2) {
    ScenarioOutcome o;
    o.id = s.id;
    o.days = s.days;
    o.stage = StageTag::Stage2;
    o.violations_baseline = ctx.baseline_violations.at(s.id);
    o.violations_sess = count_violations(in.net, s, plan.sess, cfg.dispatch);
    o.violations_final = count_violations(in.net, s, joint, cfg.dispatch);
    o.solution = ev.solutions.at(s.id);
    plan.outcomes.push_back(std::move(o));
  }
  return plan;
}

PlanResult run_plan(const RunConfig& cfg) {
  PlanResult plan = run_stage1(cfg);
  RunInputs in = load_inputs(cfg);
  if (!stage_scenarios(in.scenarios, StageTag::Stage2).empty())
    plan = run_stage2(cfg, std::move(plan));
  return plan;
}

void save_plan(const PlanResult& plan, const std::string& path) {
  json j;
  j["schema_version"] = plan.schema_version;
  j["seed"] = plan.seed;
  j["sess"] = json::array();
  for (const StorageDesign& d : plan.sess) j["sess"].push_back(design_json(d));
  j["mess"] = json::array();
  for (const StorageDesign& d : plan.mess) j["mess"].push_back(design_json(d));
  j["sess_lifetime_years"] = plan.sess_lifetime_years;
  j["stage1_cost"] = cost_json(plan.stage1_cost);
  j["stage2_cost"] = cost_json(plan.stage2_cost);
  j["stage1_fitness"] = plan.stage1_fitness;
  j["stage2_fitness"] = plan.stage2_fitness;
  j["stage1_trace"] = trace_json(plan.stage1_trace);
  j["stage2_trace"] = trace_json(plan.stage2_trace);
  j["outcomes"] = json::array();
  for (const ScenarioOutcome& o : plan.outcomes)
    j["outcomes"].push_back({{"id", o.id},
                             {"days", o.days},
                             {"stage", o.stage == StageTag::Stage2 ? "stage2" : "stage1"},
                             {"violations_baseline", o.violations_baseline},
                             {"violations_sess", o.violations_sess},
                             {"violations_final", o.violations_final},
                             {"solution", solution_json(o.solution)}});

  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write plan file: " + path);
  out << j.dump(1) << "\n";
}

PlanResult load_plan(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open plan file: " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ValidationError(std::string("plan parse error: ") + e.what());
  }
  PlanResult plan;
  plan.schema_version = j.at("schema_version");
  if (plan.schema_version != 1)
    throw ValidationError("unsupported plan schema version " +
                          std::to_string(plan.schema_version));
  plan.seed = j.at("seed");
  for (const json& d : j.at("sess")) plan.sess.push_back(parse_design(d));
  for (const json& d : j.at("mess")) plan.mess.push_back(parse_design(d));
  plan.sess_lifetime_years = j.at("sess_lifetime_years").get<std::vector<double>>();
  plan.stage1_cost = parse_cost(j.at("stage1_cost"));
  plan.stage2_cost = parse_cost(j.at("stage2_cost"));
  plan.stage1_fitness = j.at("stage1_fitness");
  plan.stage2_fitness = j.at("stage2_fitness");
  plan.stage1_trace = parse_trace(j.at("stage1_trace"));
  plan.stage2_trace = parse_trace(j.at("stage2_trace"));
  for (const json& e : j.at("outcomes")) {
    ScenarioOutcome o;
    o.id = e.at("id").get<std::string>();
    o.days = e.at("days");
    o.stage = e.at("stage") == "stage2" ? StageTag::Stage2 : StageTag::Stage1;
    o.violations_baseline = e.at("violations_baseline");
    o.violations_sess = e.at("violations_sess");
    o.violations_final = e.at("violations_final");
    o.solution = parse_solution(e.at("solution"));
    plan.outcomes.push_back(std::move(o));
  }
  return plan;
}

void revalidate(const PlanResult& plan, const RunConfig& cfg) {
  RunInputs in = load_inputs(cfg);
  std::vector<StorageDesign> joint = plan.sess;
  joint.insert(joint.end(), plan.mess.begin(), plan.mess.end());
  for (const ScenarioOutcome& o : plan.outcomes) {
    const Scenario& s = find_scenario(in.scenarios, o.id);
    const std::vector<StorageDesign>& fleet =
        (o.stage == StageTag::Stage2) ? joint : plan.sess;
    DispatchSolution sol = solve_dispatch(in.net, s, fleet, cfg.dispatch);
    if (sol.status != conic::SolveStatus::Optimal)
      throw InfeasibleError("revalidate: dispatch failed for scenario " + o.id);
    double scale = std::max(1.0, std::abs(o.solution.objective));
    if (std::abs(sol.objective - o.solution.objective) > 1e-6 * scale)
      throw ValidationError("revalidate: objective drift on scenario " + o.id + " (" +
                            std::to_string(o.solution.objective) + " stored, " +
                            std::to_string(sol.objective) + " re-solved)");
  }
}

}  // namespace gridstor
