#include <benchmark/benchmark.h>

#include "pullcons/coalescing.hpp"
#include "pullcons/configuration.hpp"
#include "pullcons/dominance.hpp"
#include "pullcons/rules.hpp"
#include "pullcons/sampler.hpp"

namespace {

using namespace pullcons;

void BM_Binomial(benchmark::State& state) {
  RngStream rng(1);
  const double p = 1.0 / static_cast<double>(state.range(1));
  for (auto _ : state) {
    benchmark::DoNotOptimize(sample_binomial(state.range(0), p, rng));
  }
}
BENCHMARK(BM_Binomial)->Args({100, 10})->Args({100000, 10})->Args({100000, 100000});

void BM_StepNColor(benchmark::State& state, UpdateRule rule) {
  RngStream rng(2);
  const auto c = Configuration::n_color(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(step(rule, c, rng));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK_CAPTURE(BM_StepNColor, voter, UpdateRule::voter())->Arg(1000)->Arg(10000);
BENCHMARK_CAPTURE(BM_StepNColor, hmaj3, UpdateRule::h_majority(3))->Arg(1000)->Arg(10000);
BENCHMARK_CAPTURE(BM_StepNColor, two_choices, UpdateRule::two_choices())->Arg(1000)->Arg(10000);

void BM_StepPerNode(benchmark::State& state) {
  RngStream rng(3);
  const auto c = Configuration::n_color(state.range(0));
  const auto rule = UpdateRule::h_majority(3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(step_per_node(rule, c, rng));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_StepPerNode)->Arg(1000)->Arg(10000);

void BM_ProcessFunctionHMaj(benchmark::State& state) {
  const auto c = Configuration::canonicalize({6, 2, 2, 2});
  const auto rule = UpdateRule::h_majority(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(process_function(rule, c));
  }
}
BENCHMARK(BM_ProcessFunctionHMaj)->Arg(3)->Arg(4)->Arg(6);

void BM_CheckDominance(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        check_dominance(UpdateRule::h_majority(3), UpdateRule::voter(), state.range(0)));
  }
}
BENCHMARK(BM_CheckDominance)->Arg(8)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_CoalescenceCountStep(benchmark::State& state) {
  RngStream rng(4);
  const auto n = static_cast<std::uint64_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(coalescence_count_step(n, n / 2, rng));
  }
}
BENCHMARK(BM_CoalescenceCountStep)->Arg(1000)->Arg(100000);

}  // namespace

BENCHMARK_MAIN();
