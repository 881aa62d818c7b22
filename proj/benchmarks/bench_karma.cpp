#include <benchmark/benchmark.h>

#include <random>

#include "karma/ke.hpp"
#include "karma/mlnw.hpp"
#include "karma/oracle.hpp"
#include "karma/sim.hpp"

namespace {

using namespace karma;

void BM_MlnwRushHour(benchmark::State& state) {
  const Problem p = rushHourScenario();
  for (auto _ : state) benchmark::DoNotOptimize(solveMlnw(p, 1e-8).objective);
}
BENCHMARK(BM_MlnwRushHour)->Unit(benchmark::kMillisecond);

void BM_FindKeRushHour(benchmark::State& state) {
  const Problem p = rushHourScenario();
  for (auto _ : state) benchmark::DoNotOptimize(findKe(p).bids);
}
BENCHMARK(BM_FindKeRushHour)->Unit(benchmark::kMillisecond);

void BM_UserProblem(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> draw(0.2, 2.0);
  UserType t;
  t.mass = 1;
  t.urgency = {{1.0, 2.0, 4.0, 8.0}, {0.4, 0.3, 0.2, 0.1}};
  std::vector<double> bids;
  for (std::size_t j = 0; j < m; ++j) {
    t.rewardsOn.push_back(draw(rng));
    t.rewardsOff.push_back(0.0);
    bids.push_back(draw(rng));
  }
  for (auto _ : state) benchmark::DoNotOptimize(solveUserProblem(t, bids, 0.5, true).kappa);
}
BENCHMARK(BM_UserProblem)->Arg(4)->Arg(16)->Arg(64);

void BM_SimStep(benchmark::State& state) {
  const Problem p = rushHourScenario();
  SimConfig config;
  config.policy = findKe(p);
  config.horizon = 1;
  config.seed = 3;
  config.meanKarma = defaultMeanKarma(config.policy);
  SimState s = initialState(p, config);
  for (auto _ : state) benchmark::DoNotOptimize(step(s, p, config).totalPayment);
  state.SetItemsProcessed(state.iterations() * p.population());
}
BENCHMARK(BM_SimStep)->Unit(benchmark::kMicrosecond);

void BM_TwoShot(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(twoShotCheck({4, 2, 1.0, 4.0, 0.5}).minMargin);
}
BENCHMARK(BM_TwoShot)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
