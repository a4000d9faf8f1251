// Serial reference loop against the OpenMP replication kernel on the work the
// experiments actually do: one coupled heavy-traffic run per replication.

#include <benchmark/benchmark.h>

#include "mobnet/experiments.hpp"
#include "mobnet/parallel.hpp"

namespace {

using namespace mobnet;

const HeavyTrafficLadder& ladder() {
  static const auto L = [] {
    Matrix Q(2, 2);
    Q << -1, 1, 1, -1;
    return HeavyTrafficLadder::make(validate_generator(Q), 1.0, 1.0, {20});
  }();
  return L;
}

double one_rep(std::size_t i) {
  const auto& p = ladder().at(0);
  const auto b = simulate_coupled(p, State{0, 0}, 400.0, Stream(1, 0).child(i));
  return rescale(b.open_path, 20).norm_at(1.0);
}

void BM_serial(benchmark::State& state) {
  const auto reps = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(replicate_serial(reps, one_rep));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_openmp(benchmark::State& state) {
  const auto reps = static_cast<std::size_t>(state.range(0));
  const int threads = static_cast<int>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(replicate(reps, threads, one_rep));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_regenerative(benchmark::State& state) {
  StationaryOptions opt;
  opt.batch_cycles = 200;
  opt.threads = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(sample_stationary(ladder().at(0), 2000, Stream(2, 0), opt));
}

}  // namespace

BENCHMARK(BM_serial)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_openmp)->Args({64, 1})->Args({64, 2})->Args({64, 4})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_regenerative)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
