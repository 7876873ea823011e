#include <benchmark/benchmark.h>

#include <random>

#include "gridstor/conic/program.hpp"
#include "gridstor/degradation.hpp"
#include "gridstor/thermal.hpp"

namespace {

using namespace gridstor;

void BM_RainflowDay(benchmark::State& state) {
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> u(0.1, 0.9);
  std::vector<double> soc(25), temp(25, 293.15);
  for (double& v : soc) v = u(rng);
  for (auto _ : state) benchmark::DoNotOptimize(rainflow(soc, temp));
}
BENCHMARK(BM_RainflowDay);

void BM_ThermalStep(benchmark::State& state) {
  ThermalParams tp;
  ThermalState st{293.15, 293.5};
  HvacAction hv;
  hv.p_cool_kw = 1.0;
  hv.x_vent = true;
  for (auto _ : state) {
    st = balance_step(st, hv, 0.8, 268.15, 3.0, tp);
    benchmark::DoNotOptimize(st);
  }
}
BENCHMARK(BM_ThermalStep);

void BM_SocpProjection(benchmark::State& state) {
  using namespace gridstor::conic;
  const int n = static_cast<int>(state.range(0));
  Model m;
  int t = m.add_var("t");
  LinExpr sum;
  std::vector<LinExpr> dev;
  std::mt19937 rng(2);
  std::normal_distribution<double> g;
  LinExpr obj = LinExpr::of(t);
  for (int i = 0; i < n; ++i) {
    int x = m.add_var("x", 0.0, kUnbounded);
    sum.add(x, 1.0);
    LinExpr d = LinExpr::of(x);
    d -= LinExpr(g(rng));
    dev.push_back(d);
  }
  sum -= LinExpr(1.0);
  m.add_eq(sum);
  m.add_soc(LinExpr::of(t), dev);
  m.minimize(obj);
  for (auto _ : state) benchmark::DoNotOptimize(m.solve());
}
BENCHMARK(BM_SocpProjection)->Arg(10)->Arg(50)->Arg(200);

}  // namespace

BENCHMARK_MAIN();
