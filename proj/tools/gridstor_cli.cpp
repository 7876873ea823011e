// Command-line front end for the two-stage storage planner.
//
// Verbs: validate, dispatch, plan-stage1, plan-stage2, plan, report.
// Exit codes: 0 success, 2 validation failure, 3 infeasible,
// 4 budget exhausted with no incumbent.

#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "gridstor/pipeline.hpp"

namespace {

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> jobs;
  std::optional<double> mip_gap;
  std::optional<double> time_limit;
};

gridstor::RunConfig load_config(const std::string& path, const Overrides& ov) {
  gridstor::RunConfig cfg = gridstor::RunConfig::load(path);
  if (ov.seed) cfg.search.seed = *ov.seed;
  if (ov.out) cfg.out_dir = *ov.out;
  if (ov.jobs) cfg.search.jobs = *ov.jobs;
  if (ov.mip_gap) cfg.dispatch.mip.rel_gap = *ov.mip_gap;
  if (ov.time_limit) cfg.dispatch.mip.time_limit_s = *ov.time_limit;
  cfg.validate();
  return cfg;
}

void print_summary(const gridstor::PlanResult& plan) {
  std::printf("stationary units: %zu, mobile sites: %zu\n", plan.sess.size(),
              plan.mess.size());
  for (size_t i = 0; i < plan.sess.size(); ++i)
    std::printf("  sess node %d: %.1f kWh / %.1f kW, soc0 %.3f, q %d, life %.2f yr\n",
                plan.sess[i].node, plan.sess[i].e_rate_kwh, plan.sess[i].p_rate_kw,
                plan.sess[i].soc0, plan.sess[i].q_enable ? 1 : 0,
                i < plan.sess_lifetime_years.size() ? plan.sess_lifetime_years[i] : 0.0);
  for (const gridstor::StorageDesign& d : plan.mess)
    std::printf("  mess node %d: %d modules, soc0 %.3f\n", d.node, d.n_modules, d.soc0);
  if (!plan.stage1_trace.empty())
    std::printf("stage-1 annual cost: %.2f $\n", plan.stage1_fitness);
  if (!plan.stage2_trace.empty())
    std::printf("stage-2 event cost: %.2f $\n", plan.stage2_fitness);
  for (const gridstor::ScenarioOutcome& o : plan.outcomes)
    std::printf("scenario %s: violations %d -> %d (sess) -> %d (final), gap %.2e\n",
                o.id.c_str(), o.violations_baseline, o.violations_sess, o.violations_final,
                o.solution.socr_gap);
}

void persist(const gridstor::PlanResult& plan, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::string plan_path = (std::filesystem::path(out_dir) / "plan.json").string();
  gridstor::save_plan(plan, plan_path);
  gridstor::report(plan, out_dir);
  std::printf("wrote %s and report CSVs\n", plan_path.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"two-stage battery storage planner for AC/DC hybrid feeders"};
  app.require_subcommand(1);

  std::string config_path, plan_path, stage1_path;
  Overrides ov;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    if (needs_config)
      sub->add_option("--config", config_path, "run configuration (JSON)")
          ->required();
    sub->add_option("--seed", ov.seed, "override search seed");
    sub->add_option("--out", ov.out, "override output directory");
    sub->add_option("--jobs", ov.jobs, "override worker count");
    sub->add_option("--mip-gap", ov.mip_gap, "override relative MIP gap");
    sub->add_option("--time-limit", ov.time_limit, "per-solve time limit, seconds");
  };

  CLI::App* validate = app.add_subcommand("validate", "check config, network and scenarios");
  add_common(validate, true);

  CLI::App* dispatch = app.add_subcommand("dispatch", "dispatch fixed designs, no search");
  add_common(dispatch, true);

  CLI::App* stage1 = app.add_subcommand("plan-stage1", "size the stationary fleet");
  add_common(stage1, true);

  CLI::App* stage2 = app.add_subcommand("plan-stage2", "rent mobile units on a frozen fleet");
  add_common(stage2, true);
  stage2->add_option("--stage1", stage1_path, "persisted stage-1 plan.json")->required();

  CLI::App* plan = app.add_subcommand("plan", "both stages end to end");
  add_common(plan, true);

  CLI::App* report_cmd = app.add_subcommand("report", "re-emit CSVs from a saved plan");
  report_cmd->add_option("--plan", plan_path, "plan.json to read")->required();
  report_cmd->add_option("--out", ov.out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand(validate)) {
      gridstor::RunConfig cfg = load_config(config_path, ov);
      gridstor::RunInputs in = gridstor::load_inputs(cfg);
      std::printf("ok: %zu buses, %zu branches, %zu scenarios\n", in.net.buses.size(),
                  in.net.ac_branches.size() + in.net.dc_branches.size(),
                  in.scenarios.size());
    } else if (app.got_subcommand(dispatch)) {
      gridstor::RunConfig cfg = load_config(config_path, ov);
      gridstor::PlanResult result = gridstor::dispatch_fixed(cfg);
      print_summary(result);
      persist(result, cfg.out_dir);
    } else if (app.got_subcommand(stage1)) {
      gridstor::RunConfig cfg = load_config(config_path, ov);
      gridstor::PlanResult result = gridstor::run_stage1(cfg);
      print_summary(result);
      persist(result, cfg.out_dir);
    } else if (app.got_subcommand(stage2)) {
      gridstor::RunConfig cfg = load_config(config_path, ov);
      gridstor::PlanResult prior = gridstor::load_plan(stage1_path);
      gridstor::PlanResult result = gridstor::run_stage2(cfg, std::move(prior));
      print_summary(result);
      persist(result, cfg.out_dir);
    } else if (app.got_subcommand(plan)) {
      gridstor::RunConfig cfg = load_config(config_path, ov);
      gridstor::PlanResult result = gridstor::run_plan(cfg);
      gridstor::revalidate(result, cfg);
      print_summary(result);
      persist(result, cfg.out_dir);
    } else if (app.got_subcommand(report_cmd)) {
      gridstor::PlanResult result = gridstor::load_plan(plan_path);
      gridstor::report(result, *ov.out);
      std::printf("wrote report CSVs to %s\n", ov.out->c_str());
    }
  } catch (const gridstor::NoIncumbentError& e) {
    std::fprintf(stderr, "no incumbent: %s\n", e.what());
    return 4;
  } catch (const gridstor::InfeasibleError& e) {
    std::fprintf(stderr, "infeasible: %s\n", e.what());
    return 3;
  } catch (const gridstor::ValidationError& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
