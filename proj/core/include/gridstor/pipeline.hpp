#pragma once

// Two-stage planning orchestration: configuration loading, stage-1
// sizing, stage-2 mobile rental on top of the frozen stationary fleet,
// result persistence and re-validation.  This is the layer the CLI
// drives; everything below it is pure in-memory computation.

#include <cstdint>
#include <string>
#include <vector>

#include "gridstor/search.hpp"

namespace gridstor {

// Strict dispatch of a required scenario failed and no relaxation was
// requested; maps to CLI exit code 3.
struct InfeasibleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The search never saw a feasible candidate (budget/bounds exclude all
// workable fleets); maps to CLI exit code 4.
struct NoIncumbentError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One run configuration document (JSON).  Paths are resolved relative
// to the config file's directory.  Scenario files missing a price
// column inherit the tariff (or the default TOU bands).
struct RunConfig {
  std::string network_path;
  std::vector<std::string> scenario_paths;
  std::string tariff_path;              // optional
  std::string out_dir = "out";
  DispatchOptions dispatch;             // econ / thermal / device / solver knobs
  SearchConfig search;
  std::vector<StorageDesign> fixed_designs;  // for the `dispatch` verb

  static RunConfig load(const std::string& path);
  void validate() const;  // throws ValidationError
};

struct RunInputs {
  HybridNetwork net;
  std::vector<Scenario> scenarios;
};

// Loads and validates the network and every scenario; tariff fill-in
// happens here.
RunInputs load_inputs(const RunConfig& cfg);

// Per-scenario record inside a plan.  Violation counts come from
// penalty-relaxed solves so they are defined even when the strict model
// is infeasible: `baseline` has no storage, `sess` only the stationary
// fleet, `final` the full planned fleet.
struct ScenarioOutcome {
  std::string id;
  int days = 1;
  StageTag stage = StageTag::Stage1;
  int violations_baseline = 0;
  int violations_sess = 0;
  int violations_final = 0;
  DispatchSolution solution;  // planned fleet, strict model
};

struct PlanResult {
  int schema_version = 1;
  std::uint64_t seed = 0;
  std::vector<StorageDesign> sess;
  std::vector<StorageDesign> mess;
  std::vector<double> sess_lifetime_years;  // aligned with `sess`
  CostReport stage1_cost, stage2_cost;
  double stage1_fitness = 0.0, stage2_fitness = 0.0;
  std::vector<GenerationStat> stage1_trace, stage2_trace;
  std::vector<ScenarioOutcome> outcomes;
};

// Stage 1 runs on the scenarios tagged stage1; stage 2 freezes the
// stationary designs and runs on the stage2 scenarios, appending their
// outcomes.  run_plan chains the two.
PlanResult run_stage1(const RunConfig& cfg);

// No searching: dispatches every scenario with the fixed designs from
// the config (the `dispatch` verb).  Cost tables stay empty.
PlanResult dispatch_fixed(const RunConfig& cfg);
PlanResult run_stage2(const RunConfig& cfg, PlanResult stage1);
PlanResult run_plan(const RunConfig& cfg);

void save_plan(const PlanResult& plan, const std::string& path);
PlanResult load_plan(const std::string& path);

// Re-solves every outcome's scenario with the persisted designs and
// checks the stored inner objectives reproduce within 1e-6 relative.
void revalidate(const PlanResult& plan, const RunConfig& cfg);

// Emits the CSV report bundle (design / LCC / event tables, hourly
// voltage, SOC, HVAC, temperature series, violation counts, search
// traces) into `out_dir`.
void report(const PlanResult& plan, const std::string& out_dir);

}  // namespace gridstor
