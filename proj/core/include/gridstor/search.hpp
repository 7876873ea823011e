#pragma once

// Outer-level metaheuristic: a real-coded genetic algorithm whose
// replacement step uses simulated-annealing acceptance, evaluated by
// the per-scenario dispatch solves.  Stage 1 sizes stationary units;
// stage 2 picks mobile module counts for an event window.

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "gridstor/dispatch.hpp"

namespace gridstor {

inline constexpr double kInfeasibleFitness = 1e9;

struct SiteGenes {
  double e_rate_kwh = 0.0;
  double p_rate_kw = 0.0;
  double soc0 = 0.5;
  bool q_enable = false;
};

struct Stage1Chromosome {
  std::vector<SiteGenes> sites;  // aligned with the SESS placements
};

struct MessGenes {
  int n_modules = 0;
  double soc0 = 0.5;
};

struct Stage2Chromosome {
  std::vector<MessGenes> sites;  // aligned with the MESS placements
};

struct SearchConfig {
  int population = 24;
  int generations = 60;
  double crossover = 0.8;
  double mutation = 0.1;
  int elitism = 2;
  double sa_t0_frac = 0.10;  // T0 as a fraction of |initial best|
  double sa_cooling = 0.95;
  std::uint64_t seed = 0;
  int jobs = 1;

  void validate() const;  // throws ValidationError
};

struct GenerationStat {
  int generation = 0;
  double best = 0.0;  // population best (== best so far with elitism)
  double mean = 0.0;
  double temperature = 0.0;
};

struct SearchResult {
  std::vector<double> best_genes;
  double best_fitness = 0.0;
  std::vector<GenerationStat> trace;
  int evaluations = 0;
  int cache_hits = 0;
};

struct GeneSpec {
  double lb = 0.0, ub = 1.0;
  bool integer = false;
};

// Generic driver.  All randomness is drawn on the calling thread in a
// fixed order; fitness calls may fan out to `jobs` workers, so results
// are bit-identical for a fixed seed regardless of parallelism.
SearchResult ga_sa_search(const std::vector<GeneSpec>& spec,
                          const std::function<double(const std::vector<double>&)>& fitness,
                          const SearchConfig& cfg,
                          const std::function<void(std::vector<double>&)>& repair = {});

// Scenario bundle plus the storage-free references used for the
// loss-reduction benefit; baselines are solved once up front.
struct SearchContext {
  const HybridNetwork* net = nullptr;
  std::vector<Scenario> scenarios;
  DispatchOptions opts;
  std::map<std::string, double> baseline_c_loss;  // per scenario id
  std::map<std::string, int> baseline_violations;

  static SearchContext make(const HybridNetwork& net, std::vector<Scenario> scenarios,
                            const DispatchOptions& opts);
};

// Box + budget projection; always returns a feasible chromosome.
Stage1Chromosome repair_stage1(Stage1Chromosome c, const HybridNetwork& net,
                               const EconParams& p);
Stage2Chromosome repair_stage2(Stage2Chromosome c, const HybridNetwork& net,
                               const EconParams& p);

std::vector<StorageDesign> designs_stage1(const Stage1Chromosome& c, const HybridNetwork& net);
std::vector<StorageDesign> designs_stage2(const Stage2Chromosome& c, const HybridNetwork& net);

// Full evaluation of a candidate: cost breakdown, per-scenario
// solutions and (stage 1) per-site lifetime estimates.  `feasible` is
// false when any scenario dispatch fails to solve.
struct Stage1Evaluation {
  bool feasible = false;
  CostReport cost;
  std::vector<StorageDesign> active;      // designs that made the fleet
  std::vector<double> lifetime_years;     // aligned with `active`
  std::map<std::string, DispatchSolution> solutions;  // per scenario id
};
struct Stage2Evaluation {
  bool feasible = false;
  CostReport cost;
  std::map<std::string, DispatchSolution> solutions;
};
Stage1Evaluation evaluate_stage1(const Stage1Chromosome& c, const SearchContext& ctx);
Stage2Evaluation evaluate_stage2(const Stage2Chromosome& c,
                                 const std::vector<StorageDesign>& frozen,
                                 const SearchContext& ctx);

// Annualized life-cycle cost of the candidate SESS fleet (lower is
// better); infeasible dispatch maps to kInfeasibleFitness.
double fitness_stage1(const Stage1Chromosome& c, const SearchContext& ctx);

// Event-window cost of renting the mobile fleet on top of frozen
// stationary units.
double fitness_stage2(const Stage2Chromosome& c, const std::vector<StorageDesign>& frozen,
                      const SearchContext& ctx);

struct StageSearchOutcome {
  SearchResult search;
  Stage1Chromosome stage1;
  Stage2Chromosome stage2;
};

StageSearchOutcome search_stage1(const SearchContext& ctx, const SearchConfig& cfg);
StageSearchOutcome search_stage2(const SearchContext& ctx, const std::vector<StorageDesign>& frozen,
                                 const SearchConfig& cfg);

// Chromosome <-> flat gene vector, shared by the driver and persistence.
std::vector<GeneSpec> gene_spec_stage1(const HybridNetwork& net, const DeviceParams& dp);
std::vector<GeneSpec> gene_spec_stage2(const HybridNetwork& net, const DeviceParams& dp);
Stage1Chromosome decode_stage1(const std::vector<double>& genes, const HybridNetwork& net);
Stage2Chromosome decode_stage2(const std::vector<double>& genes, const HybridNetwork& net);
std::vector<double> encode_stage1(const Stage1Chromosome& c);
std::vector<double> encode_stage2(const Stage2Chromosome& c);

}  // namespace gridstor
