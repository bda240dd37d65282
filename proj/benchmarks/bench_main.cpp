#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "mcqpsy/analysis.hpp"
#include "mcqpsy/calibrate.hpp"
#include "mcqpsy/collector.hpp"
#include "mcqpsy/psychometrics.hpp"

namespace {

using namespace mcqpsy;

struct Subset {
  std::vector<Item> items;
  std::vector<ModelResponse> responses;
  std::vector<ItemResponse> pairs;
};

Subset make_subset(std::size_t n) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0.0, 2.0);
  Subset s;
  s.items.reserve(n);
  s.responses.reserve(n);
  auto perms = cyclic_permutations();
  for (std::size_t i = 0; i < n; ++i) {
    ModelResponse r;
    r.item_id = "i" + std::to_string(i);
    r.model_id = "m";
    for (int k = 0; k < 4; ++k) r.runs[k] = {perms[k], {g(rng), g(rng), g(rng), g(rng)}};
    Item item;
    item.item_id = r.item_id;
    item.subset = {"d", "s", "l"};
    item.stem = "q";
    item.options = {"a", "b", "c", "d"};
    item.human_dist = scaled_distribution(r, 3.0);
    s.items.push_back(item);
    s.responses.push_back(r);
  }
  for (std::size_t i = 0; i < n; ++i) s.pairs.push_back({&s.items[i], &s.responses[i]});
  return s;
}

void BM_OptimizeTemperature(benchmark::State& state) {
  Subset s = make_subset(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(optimize_temperature(s.pairs));
}
BENCHMARK(BM_OptimizeTemperature)->Arg(50)->Arg(250)->Unit(benchmark::kMillisecond);

void BM_BootstrapMean(benchmark::State& state) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u;
  std::vector<double> v(static_cast<std::size_t>(state.range(0)));
  for (double& x : v) x = u(rng);
  for (auto _ : state) benchmark::DoNotOptimize(bootstrap_mean_ci(v, {2000, 0.95, 3}));
}
BENCHMARK(BM_BootstrapMean)->Arg(100)->Arg(500)->Unit(benchmark::kMillisecond);

void BM_PopulationFacility(benchmark::State& state) {
  IrtItemParams p{"s", 1.3, 0.2, 0.2};
  for (auto _ : state) benchmark::DoNotOptimize(population_facility(p, 0.0, 1.0));
}
BENCHMARK(BM_PopulationFacility);

void BM_Simulate(benchmark::State& state) {
  std::vector<IrtItemParams> params(20, {"s", 1.0, 0.0, 0.2});
  std::vector<double> thetas(static_cast<std::size_t>(state.range(0)), 0.0);
  for (auto _ : state) benchmark::DoNotOptimize(simulate_response_matrix(params, thetas, 4));
}
BENCHMARK(BM_Simulate)->Arg(10000)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
