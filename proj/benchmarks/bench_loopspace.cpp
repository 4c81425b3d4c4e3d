#include "fixtures.hpp"

#include "varorbit/gradientflow.hpp"
#include "varorbit/minimax.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace fixtures;
using namespace varorbit;

namespace {

Loop loop_for(const Manifold& m, int n) {
  std::mt19937_64 rng(1);
  Eigen::VectorXi w;
  if (m.has_periodic_coordinates()) {
    w = Eigen::VectorXi::Zero(m.coord_dim());
    w[m.coord_dim() - 1] = 1;
  }
  return random_loop(rng, m, n, 2.0, w);
}

const Lagrangian& lagrangian(int which) {
  static const Lagrangian cases[] = {magnetic_plane(1.0), kinetic(cylinder()), kinetic(sphere())};
  return cases[which];
}

void BM_Action(benchmark::State& st) {
  const Lagrangian& L = lagrangian(static_cast<int>(st.range(1)));
  const Loop l = loop_for(L.manifold(), static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(action(L, 0.5, l));
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

void BM_Differential(benchmark::State& st) {
  const Lagrangian& L = lagrangian(static_cast<int>(st.range(1)));
  const Loop l = loop_for(L.manifold(), static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(differential(L, 0.5, l));
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

void BM_RieszSolve(benchmark::State& st) {
  const Lagrangian& L = lagrangian(static_cast<int>(st.range(1)));
  const Loop l = loop_for(L.manifold(), static_cast<int>(st.range(0)));
  const ActionDifferential d = differential(L, 0.5, l);
  RieszSolver solver(L.manifold_ptr());
  for (auto _ : st) {
    solver.factorize(l);
    benchmark::DoNotOptimize(solver.solve(d.dS));
  }
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

void BM_FlowSecond(benchmark::State& st) {
  const Lagrangian L = magnetic_plane(1.0);
  const Loop l = cyclotron(static_cast<int>(st.range(0)), 1.3);
  for (auto _ : st) benchmark::DoNotOptimize(evolve(FlowConfig{}, L, 0.5, l, 1.0));
}

void BM_NewtonCyclotron(benchmark::State& st) {
  const Lagrangian L = magnetic_plane(1.0);
  Loop l = cyclotron(static_cast<int>(st.range(0)));
  l.samples *= 1.01;
  for (auto _ : st) benchmark::DoNotOptimize(refine_critical_point(L, 0.5, l));
}

void sizes(benchmark::internal::Benchmark* b) {
  for (int which = 0; which < 3; ++which)
    for (int n : {64, 256, 512}) b->Args({n, which});
}

}  // namespace

BENCHMARK(BM_Action)->Apply(sizes);
BENCHMARK(BM_Differential)->Apply(sizes);
BENCHMARK(BM_RieszSolve)->Apply(sizes);
BENCHMARK(BM_FlowSecond)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_NewtonCyclotron)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);
