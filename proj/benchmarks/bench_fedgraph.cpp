#include "fedgraph/baselines.hpp"
#include "fedgraph/chi2.hpp"
#include "fedgraph/edge_select.hpp"
#include "fedgraph/fedadmm.hpp"
#include "fedgraph/synth.hpp"

#include <benchmark/benchmark.h>

using namespace fedgraph;

namespace {

SynthInstance instance(int devices, int dim, int n) {
  SynthConfig c;
  c.num_devices = devices;
  c.num_clusters = 5;
  c.dim = dim;
  c.samples_per_device = n;
  c.seed = 1;
  return generate(c);
}

void BM_EdgeProx(benchmark::State& state) {
  const int p = static_cast<int>(state.range(0));
  Rng r(3);
  Vector a(p), b(p);
  for (int i = 0; i < p; ++i) {
    a[i] = r.normal();
    b[i] = r.normal();
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(edge_prox(a, b, 0.3, 1.0, EdgeNorm::l1));
  }
}
BENCHMARK(BM_EdgeProx)->Arg(5)->Arg(20)->Arg(100);

// One full solver iteration (node and edge updates) on the Fig. S1 cell size.
void BM_FedAdmmIterations(benchmark::State& state) {
  const auto inst = instance(static_cast<int>(state.range(0)), 20, 100);
  SolverConfig c;
  c.lambda = 0.01;
  c.batch_size = 10;
  c.iterations = 100;
  c.threads = static_cast<int>(state.range(1));
  for (auto _ : state) {
    benchmark::DoNotOptimize(run(inst.graph, inst.data, c).theta_bar);
  }
  state.SetItemsProcessed(state.iterations() * c.iterations);
}
BENCHMARK(BM_FedAdmmIterations)->Args({40, 1})->Args({80, 1})->Args({80, 4})->Unit(benchmark::kMillisecond);

void BM_ReferenceMinimizer(benchmark::State& state) {
  const auto inst = instance(10, 5, 50);
  for (auto _ : state) {
    benchmark::DoNotOptimize(reference_minimizer(inst.graph, inst.data, 0.01, EdgeNorm::l1).theta);
  }
}
BENCHMARK(BM_ReferenceMinimizer)->Unit(benchmark::kMillisecond);

void BM_SelectEdges(benchmark::State& state) {
  const auto inst = instance(40, 20, 100);
  const auto fits = local_all(inst.data).fits;
  for (auto _ : state) {
    benchmark::DoNotOptimize(select_edges(inst.graph, fits, 0.05).selected);
  }
}
BENCHMARK(BM_SelectEdges)->Unit(benchmark::kMicrosecond);

void BM_LocalFitsLogistic(benchmark::State& state) {
  SynthConfig c;
  c.num_devices = 20;
  c.num_clusters = 2;
  c.dim = 10;
  c.samples_per_device = 200;
  c.family = Family::logistic;
  const auto inst = generate(c);
  for (auto _ : state) {
    benchmark::DoNotOptimize(local_all(inst.data).theta);
  }
}
BENCHMARK(BM_LocalFitsLogistic)->Unit(benchmark::kMillisecond);

void BM_Chi2Quantile(benchmark::State& state) {
  double q = 1e-3;
  for (auto _ : state) {
    benchmark::DoNotOptimize(chi2_quantile(20, q));
    q = q < 1e-8 ? 1e-3 : q * 0.9;
  }
}
BENCHMARK(BM_Chi2Quantile);

}  // namespace

BENCHMARK_MAIN();
