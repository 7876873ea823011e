#include "gridstor/search.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <random>
#include <thread>

#include "gridstor/degradation.hpp"
#include "gridstor/economics.hpp"

namespace gridstor {

namespace {

std::vector<const Placement*> placements_of(const HybridNetwork& net, StorageKind kind) {
  std::vector<const Placement*> out;
  for (const Placement& p : net.placements)
    if (p.kind == kind) out.push_back(&p);
  return out;
}

double clampd(double v, double lo, double hi) { return std::min(hi, std::max(lo, v)); }

double budget_row_stage1(const Stage1Chromosome& c, const EconParams& p) {
  double total = 0.0;
  for (const SiteGenes& g : c.sites)
    total += (p.c_e + p.c_b) * g.e_rate_kwh + p.c_p * g.p_rate_kw;
  return total;
}

// 25-sample SOC and container-temperature series for the fade model
void fade_series(const DeviceDispatch& d, const Scenario& s, bool thermal,
                 std::vector<double>& soc, std::vector<double>& temp) {
  soc.assign(d.soc.begin(), d.soc.end());
  temp.clear();
  for (int t = 0; t <= kHoursPerDay; ++t) {
    if (thermal)
      temp.push_back(d.t_cess_k[t]);
    else
      temp.push_back(s.temp_k[std::min(t, kHoursPerDay - 1)]);
  }
}

double soc_average(const DeviceDispatch& d) {
  double sum = 0.0;
  for (int t = 1; t <= kHoursPerDay; ++t) sum += d.soc[t];
  return sum / kHoursPerDay;
}

std::vector<double> throughput_dods(const DeviceDispatch& d) {
  std::vector<double> out;
  for (int t = 0; t < kHoursPerDay; ++t)
    out.push_back(d.p_dis_kw[t] /
                  (d.rating.e_rate_kwh * d.rating.eta_d * d.rating.eta_pcs));
  return out;
}

}  // namespace

void SearchConfig::validate() const {
  auto bad = [](const std::string& m) { throw ValidationError("search config: " + m); };
  if (population < 2) bad("population must be at least 2");
  if (generations < 1) bad("need at least one generation");
  if (crossover < 0 || crossover > 1 || mutation < 0 || mutation > 1)
    bad("rates must lie in [0,1]");
  if (elitism < 0 || elitism >= population) bad("elitism must be in [0, population)");
  if (sa_cooling <= 0 || sa_cooling >= 1) bad("cooling factor must be in (0,1)");
  if (sa_t0_frac < 0) bad("initial temperature fraction must be non-negative");
  if (jobs < 1) bad("jobs must be positive");
}

SearchResult ga_sa_search(const std::vector<GeneSpec>& spec,
                          const std::function<double(const std::vector<double>&)>& fitness,
                          const SearchConfig& cfg,
                          const std::function<void(std::vector<double>&)>& repair) {
  cfg.validate();
  const int ng = static_cast<int>(spec.size());
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  auto sanitize = [&](std::vector<double>& g) {
    for (int i = 0; i < ng; ++i) {
      if (spec[i].integer) g[i] = std::round(g[i]);
      g[i] = clampd(g[i], spec[i].lb, spec[i].ub);
    }
    if (repair) repair(g);
  };

  SearchResult res;
  std::map<std::vector<long long>, double> cache;
  std::mutex cache_mu;
  auto key_of = [&](const std::vector<double>& g) {
    std::vector<long long> k(ng);
    for (int i = 0; i < ng; ++i) k[i] = std::llround(g[i] * 1000.0);
    return k;
  };

  auto evaluate = [&](const std::vector<std::vector<double>>& pop) {
    std::vector<double> fit(pop.size());
    std::vector<size_t> misses;
    for (size_t i = 0; i < pop.size(); ++i) {
      auto it = cache.find(key_of(pop[i]));
      if (it != cache.end()) {
        fit[i] = it->second;
        ++res.cache_hits;
      } else {
        misses.push_back(i);
      }
    }
    res.evaluations += static_cast<int>(misses.size());
    int workers = std::max(1, std::min<int>(cfg.jobs, static_cast<int>(misses.size())));
    if (workers <= 1) {
      for (size_t i : misses) fit[i] = fitness(pop[i]);
    } else {
      std::atomic<size_t> next{0};
      std::exception_ptr first_error;
      std::mutex err_mu;
      std::vector<std::thread> pool;
      for (int w = 0; w < workers; ++w)
        pool.emplace_back([&]() {
          for (;;) {
            size_t j = next.fetch_add(1);
            if (j >= misses.size()) return;
            try {
              fit[misses[j]] = fitness(pop[misses[j]]);
            } catch (...) {
              std::lock_guard<std::mutex> lk(err_mu);
              if (!first_error) first_error = std::current_exception();
              next.store(misses.size());  // drain remaining work
              return;
            }
          }
        });
      for (std::thread& t : pool) t.join();
      if (first_error) std::rethrow_exception(first_error);
    }
    std::lock_guard<std::mutex> lk(cache_mu);
    for (size_t i : misses) cache[key_of(pop[i])] = fit[i];
    return fit;
  };

  // initial population
  std::vector<std::vector<double>> pop(cfg.population, std::vector<double>(ng));
  for (auto& g : pop) {
    for (int i = 0; i < ng; ++i) g[i] = spec[i].lb + u01(rng) * (spec[i].ub - spec[i].lb);
    sanitize(g);
  }
  std::vector<double> fit = evaluate(pop);

  auto best_idx = [&]() {
    return static_cast<size_t>(std::min_element(fit.begin(), fit.end()) - fit.begin());
  };
  size_t b0 = best_idx();
  res.best_genes = pop[b0];
  res.best_fitness = fit[b0];
  double temp = cfg.sa_t0_frac * std::max(1.0, std::abs(res.best_fitness));

  auto record = [&](int gen) {
    double mean = 0.0;
    for (double f : fit) mean += f;
    mean /= fit.size();
    res.trace.push_back({gen, *std::min_element(fit.begin(), fit.end()), mean, temp});
  };
  record(0);

  std::uniform_int_distribution<int> pick(0, cfg.population - 1);
  for (int gen = 1; gen <= cfg.generations; ++gen) {
    auto tournament = [&]() {
      int a = pick(rng), b = pick(rng);
      return fit[a] <= fit[b] ? a : b;
    };
    std::vector<std::vector<double>> off(cfg.population);
    for (int i = 0; i < cfg.population; ++i) {
      int p1 = tournament();
      std::vector<double> child = pop[p1];
      if (u01(rng) < cfg.crossover) {
        int p2 = tournament();
        for (int g = 0; g < ng; ++g) {
          double a = u01(rng);
          child[g] = a * pop[p1][g] + (1.0 - a) * pop[p2][g];
        }
      }
      for (int g = 0; g < ng; ++g) {
        if (u01(rng) >= cfg.mutation) continue;
        if (spec[g].integer) {
          child[g] += (u01(rng) < 0.5 ? -1.0 : 1.0);
        } else {
          std::normal_distribution<double> n(0.0, 0.1 * (spec[g].ub - spec[g].lb));
          child[g] += n(rng);
        }
      }
      sanitize(child);
      off[i] = std::move(child);
    }
    std::vector<double> off_fit = evaluate(off);
    for (int i = 0; i < cfg.population; ++i) {
      double delta = off_fit[i] - fit[i];
      bool take = delta <= 0;
      if (!take && temp > 0) take = u01(rng) < std::exp(-delta / temp);
      if (take) {
        pop[i] = std::move(off[i]);
        fit[i] = off_fit[i];
      }
    }
    // elitism: the best-so-far individuals overwrite the current worst
    if (cfg.elitism > 0) {
      size_t bi = best_idx();
      if (fit[bi] > res.best_fitness) {
        size_t worst =
            static_cast<size_t>(std::max_element(fit.begin(), fit.end()) - fit.begin());
        pop[worst] = res.best_genes;
        fit[worst] = res.best_fitness;
      }
    }
    size_t bi = best_idx();
    if (fit[bi] < res.best_fitness) {
      res.best_fitness = fit[bi];
      res.best_genes = pop[bi];
    }
    temp *= cfg.sa_cooling;
    record(gen);
  }
  return res;
}

SearchContext SearchContext::make(const HybridNetwork& net, std::vector<Scenario> scenarios,
                                  const DispatchOptions& opts) {
  SearchContext ctx;
  ctx.net = &net;
  ctx.scenarios = std::move(scenarios);
  ctx.opts = opts;
  DispatchOptions relaxed = opts;
  relaxed.penalty_relaxed = true;
  for (const Scenario& s : ctx.scenarios) {
    DispatchSolution base = baseline_dispatch(net, s, relaxed);
    if (base.status != conic::SolveStatus::Optimal)
      throw ValidationError("baseline dispatch failed for scenario " + s.id);
    ctx.baseline_c_loss[s.id] = base.c_loss;
    ctx.baseline_violations[s.id] = base.violations;
  }
  return ctx;
}

Stage1Chromosome repair_stage1(Stage1Chromosome c, const HybridNetwork& net,
                               const EconParams& p) {
  auto sites = placements_of(net, StorageKind::Sess);
  c.sites.resize(sites.size());
  for (size_t i = 0; i < sites.size(); ++i) {
    SiteGenes& g = c.sites[i];
    if (g.e_rate_kwh > 0 || g.p_rate_kw > 0) {
      g.e_rate_kwh = clampd(g.e_rate_kwh, sites[i]->e_min_kwh, sites[i]->e_max_kwh);
      g.p_rate_kw = clampd(g.p_rate_kw, sites[i]->p_min_kw, sites[i]->p_max_kw);
    }
    g.soc0 = clampd(g.soc0, 0.10, 0.90);
  }
  // budget projection: shrink proportionally, switch sites off when the
  // shrink would dip under their minimum viable size
  for (int guard = 0; guard < 8; ++guard) {
    double total = budget_row_stage1(c, p);
    if (total <= p.budget) break;
    double scale = total > 0 ? p.budget / total : 0.0;
    for (size_t i = 0; i < c.sites.size(); ++i) {
      SiteGenes& g = c.sites[i];
      g.e_rate_kwh *= scale;
      g.p_rate_kw *= scale;
      if (g.e_rate_kwh < sites[i]->e_min_kwh || g.p_rate_kw < sites[i]->p_min_kw) {
        g.e_rate_kwh = 0.0;
        g.p_rate_kw = 0.0;
      }
    }
  }
  return c;
}

Stage2Chromosome repair_stage2(Stage2Chromosome c, const HybridNetwork& net,
                               const EconParams& p) {
  auto sites = placements_of(net, StorageKind::Mess);
  c.sites.resize(sites.size());
  for (size_t i = 0; i < sites.size(); ++i) {
    MessGenes& g = c.sites[i];
    g.n_modules = std::max(0, std::min(g.n_modules, sites[i]->n_mess_max));
    g.soc0 = clampd(g.soc0, 0.10, 0.90);
  }
  // rent-only budget row; variable cost is unknown until dispatch
  for (int guard = 0; guard < 1024; ++guard) {
    double rent = 0.0;
    for (const MessGenes& g : c.sites) rent += p.c_rent * g.n_modules * p.t_rent_days;
    if (rent <= p.budget) break;
    auto big = std::max_element(c.sites.begin(), c.sites.end(),
                                [](const MessGenes& a, const MessGenes& b) {
                                  return a.n_modules < b.n_modules;
                                });
    if (big == c.sites.end() || big->n_modules == 0) break;
    --big->n_modules;
  }
  return c;
}

std::vector<StorageDesign> designs_stage1(const Stage1Chromosome& c, const HybridNetwork& net) {
  auto sites = placements_of(net, StorageKind::Sess);
  std::vector<StorageDesign> out;
  for (size_t i = 0; i < sites.size() && i < c.sites.size(); ++i) {
    StorageDesign d;
    d.node = sites[i]->node;
    d.kind = StorageKind::Sess;
    d.e_rate_kwh = c.sites[i].e_rate_kwh;
    d.p_rate_kw = c.sites[i].p_rate_kw;
    d.soc0 = c.sites[i].soc0;
    d.q_enable = c.sites[i].q_enable;
    d.n_cess = sites[i]->n_cess;
    d.colocated = sites[i]->colocated;
    out.push_back(d);
  }
  return out;
}

std::vector<StorageDesign> designs_stage2(const Stage2Chromosome& c, const HybridNetwork& net) {
  auto sites = placements_of(net, StorageKind::Mess);
  std::vector<StorageDesign> out;
  for (size_t i = 0; i < sites.size() && i < c.sites.size(); ++i) {
    StorageDesign d;
    d.node = sites[i]->node;
    d.kind = StorageKind::Mess;
    d.n_modules = c.sites[i].n_modules;
    d.soc0 = c.sites[i].soc0;
    d.n_cess = sites[i]->n_cess;
    d.colocated = sites[i]->colocated;
    out.push_back(d);
  }
  return out;
}

Stage1Evaluation evaluate_stage1(const Stage1Chromosome& c, const SearchContext& ctx) {
  const EconParams& ec = ctx.opts.econ;
  if (budget_row_stage1(c, ec) > ec.budget * (1.0 + 1e-9))
    throw ValidationError("fitness_stage1: budget row violated after repair");
  std::vector<StorageDesign> designs = designs_stage1(c, *ctx.net);

  Stage1Evaluation ev;
  for (const StorageDesign& d : designs)
    if (d.active(ec)) ev.active.push_back(d);

  double c_var = 0, b_arb = 0, b_loss = 0, worst_gap = 0;
  std::vector<double> annual_damage(ev.active.size(), 0.0);
  for (const Scenario& s : ctx.scenarios) {
    DispatchSolution sol = solve_dispatch(*ctx.net, s, designs, ctx.opts);
    if (sol.status != conic::SolveStatus::Optimal) return ev;
    double days = s.days;
    c_var += days * sol.c_var;
    b_arb += days * sol.b_arb;
    b_loss += days * (ctx.baseline_c_loss.at(s.id) - sol.c_loss);
    worst_gap = std::max(worst_gap, sol.socr_gap);
    // dispatch keeps active designs only, in order
    for (size_t i = 0; i < sol.devices.size(); ++i) {
      std::vector<double> soc, temp;
      fade_series(sol.devices[i], s, ctx.opts.with_thermal, soc, temp);
      auto cycles = rainflow(soc, temp);
      annual_damage[i] += days * daily_degradation(soc_average(sol.devices[i]), cycles);
    }
    ev.solutions.emplace(s.id, std::move(sol));
  }

  double c_cap = 0, c_rep = 0, c_fix = 0, c_dis = 0;
  for (size_t i = 0; i < ev.active.size(); ++i) {
    BessRating r = make_rating(ev.active[i], ctx.opts.device, ec);
    c_cap += annualized_capital(r, ec);
    c_fix += ec.c_f * r.p_rate_kw;
    double n = lifetime_years(annual_damage[i]);
    ev.lifetime_years.push_back(n);
    ReplacementCost rc = replacement_and_disposal(r, n, ec);
    c_rep += rc.c_rep;
    c_dis += rc.c_dis;
  }
  ev.cost = assemble_stage1(c_cap, c_rep, c_fix, c_var, c_dis, b_arb, b_loss, worst_gap, ec);
  ev.feasible = true;
  return ev;
}

double fitness_stage1(const Stage1Chromosome& c, const SearchContext& ctx) {
  Stage1Evaluation ev = evaluate_stage1(c, ctx);
  return ev.feasible ? ev.cost.net() : kInfeasibleFitness;
}

Stage2Evaluation evaluate_stage2(const Stage2Chromosome& c,
                                 const std::vector<StorageDesign>& frozen,
                                 const SearchContext& ctx) {
  const EconParams& ec = ctx.opts.econ;
  std::vector<StorageDesign> designs = frozen;
  std::vector<StorageDesign> mess = designs_stage2(c, *ctx.net);
  designs.insert(designs.end(), mess.begin(), mess.end());

  std::vector<int> n_per_site;
  double rent_probe = 0.0;
  for (const MessGenes& g : c.sites) {
    if (g.n_modules > 0) n_per_site.push_back(g.n_modules);
    rent_probe += ec.c_rent * g.n_modules * ec.t_rent_days;
  }
  if (rent_probe > ec.budget * (1.0 + 1e-9))
    throw ValidationError("fitness_stage2: rent budget row violated after repair");

  Stage2Evaluation ev;
  double c_var = 0, b_arb = 0, b_loss = 0, worst_gap = 0, days_total = 0;
  std::map<int, double> zeta_site;  // node -> day-weighted daily life damage
  for (const Scenario& s : ctx.scenarios) {
    DispatchSolution sol = solve_dispatch(*ctx.net, s, designs, ctx.opts);
    if (sol.status != conic::SolveStatus::Optimal) return ev;
    double days = s.days;
    days_total += days;
    c_var += days * sol.c_var;
    b_arb += days * sol.b_arb;
    b_loss += days * (ctx.baseline_c_loss.at(s.id) - sol.c_loss);
    worst_gap = std::max(worst_gap, sol.socr_gap);
    for (const DeviceDispatch& d : sol.devices) {
      if (d.design.kind != StorageKind::Mess) continue;
      double zeta = linear_daily_damage(soc_average(d), throughput_dods(d));
      zeta_site[d.design.node] += days * zeta;
    }
    ev.solutions.emplace(s.id, std::move(sol));
  }

  std::vector<double> zeta_modules;
  double c_fix = 0.0;
  for (const StorageDesign& d : mess) {
    if (d.n_modules <= 0) continue;
    double zeta = days_total > 0 ? zeta_site[d.node] / days_total : 0.0;
    for (int k = 0; k < d.n_modules; ++k) zeta_modules.push_back(zeta);
    c_fix += ec.c_f * d.n_modules * ec.p_rate_mess_kw * ec.t_rent_days / 365.0;
  }
  double c_rent = mess_rent(n_per_site, zeta_modules, ec);
  ev.cost = assemble_stage2(c_rent, c_fix, c_var, b_arb, b_loss, worst_gap, ec);
  ev.feasible = true;
  return ev;
}

double fitness_stage2(const Stage2Chromosome& c, const std::vector<StorageDesign>& frozen,
                      const SearchContext& ctx) {
  Stage2Evaluation ev = evaluate_stage2(c, frozen, ctx);
  return ev.feasible ? ev.cost.net() : kInfeasibleFitness;
}

std::vector<GeneSpec> gene_spec_stage1(const HybridNetwork& net, const DeviceParams& dp) {
  std::vector<GeneSpec> spec;
  for (const Placement* p : placements_of(net, StorageKind::Sess)) {
    spec.push_back({p->e_min_kwh, p->e_max_kwh, false});
    spec.push_back({p->p_min_kw, p->p_max_kw, false});
    spec.push_back({dp.soc_min, dp.soc_max, false});
    spec.push_back({0.0, 1.0, true});
  }
  return spec;
}

std::vector<GeneSpec> gene_spec_stage2(const HybridNetwork& net, const DeviceParams& dp) {
  std::vector<GeneSpec> spec;
  for (const Placement* p : placements_of(net, StorageKind::Mess)) {
    spec.push_back({0.0, static_cast<double>(p->n_mess_max), true});
    spec.push_back({dp.soc_min, dp.soc_max, false});
  }
  return spec;
}

Stage1Chromosome decode_stage1(const std::vector<double>& genes, const HybridNetwork& net) {
  Stage1Chromosome c;
  size_t n = placements_of(net, StorageKind::Sess).size();
  for (size_t i = 0; i < n; ++i) {
    SiteGenes g;
    g.e_rate_kwh = genes[4 * i];
    g.p_rate_kw = genes[4 * i + 1];
    g.soc0 = genes[4 * i + 2];
    g.q_enable = genes[4 * i + 3] >= 0.5;
    c.sites.push_back(g);
  }
  return c;
}

Stage2Chromosome decode_stage2(const std::vector<double>& genes, const HybridNetwork& net) {
  Stage2Chromosome c;
  size_t n = placements_of(net, StorageKind::Mess).size();
  for (size_t i = 0; i < n; ++i) {
    MessGenes g;
    g.n_modules = static_cast<int>(std::lround(genes[2 * i]));
    g.soc0 = genes[2 * i + 1];
    c.sites.push_back(g);
  }
  return c;
}

std::vector<double> encode_stage1(const Stage1Chromosome& c) {
  std::vector<double> g;
  for (const SiteGenes& s : c.sites) {
    g.push_back(s.e_rate_kwh);
    g.push_back(s.p_rate_kw);
    g.push_back(s.soc0);
    g.push_back(s.q_enable ? 1.0 : 0.0);
  }
  return g;
}

std::vector<double> encode_stage2(const Stage2Chromosome& c) {
  std::vector<double> g;
  for (const MessGenes& s : c.sites) {
    g.push_back(static_cast<double>(s.n_modules));
    g.push_back(s.soc0);
  }
  return g;
}

StageSearchOutcome search_stage1(const SearchContext& ctx, const SearchConfig& cfg) {
  auto spec = gene_spec_stage1(*ctx.net, ctx.opts.device);
  auto repair = [&](std::vector<double>& g) {
    g = encode_stage1(repair_stage1(decode_stage1(g, *ctx.net), *ctx.net, ctx.opts.econ));
  };
  auto fit = [&](const std::vector<double>& g) {
    return fitness_stage1(decode_stage1(g, *ctx.net), ctx);
  };
  StageSearchOutcome out;
  out.search = ga_sa_search(spec, fit, cfg, repair);
  out.stage1 = decode_stage1(out.search.best_genes, *ctx.net);
  return out;
}

StageSearchOutcome search_stage2(const SearchContext& ctx,
                                 const std::vector<StorageDesign>& frozen,
                                 const SearchConfig& cfg) {
  auto spec = gene_spec_stage2(*ctx.net, ctx.opts.device);
  auto repair = [&](std::vector<double>& g) {
    g = encode_stage2(repair_stage2(decode_stage2(g, *ctx.net), *ctx.net, ctx.opts.econ));
  };
  auto fit = [&](const std::vector<double>& g) {
    return fitness_stage2(decode_stage2(g, *ctx.net), frozen, ctx);
  };
  StageSearchOutcome out;
  out.search = ga_sa_search(spec, fit, cfg, repair);
  out.stage2 = decode_stage2(out.search.best_genes, *ctx.net);
  return out;
}

}  // namespace gridstor
