#include <benchmark/benchmark.h>

#include <random>

#include "wkw/coverage.hpp"
#include "wkw/link_prediction.hpp"
#include "wkw/pipeline.hpp"
#include "wkw/resolution.hpp"
#include "wkw/simweb.hpp"

using namespace wkw;

namespace {

IncidenceMatrix capture(std::size_t population, std::size_t sources, double p) {
  std::mt19937_64 rng(1);
  std::bernoulli_distribution hit(p);
  std::map<std::string, std::set<std::string>> seen;
  for (std::size_t e = 0; e < population; ++e)
    for (std::size_t j = 0; j < sources; ++j)
      if (hit(rng)) seen["e" + std::to_string(e)].insert("s" + std::to_string(j));
  return IncidenceMatrix::from_sets(seen);
}

void BM_Chao1FromMatrix(benchmark::State& state) {
  auto m = capture(static_cast<std::size_t>(state.range(0)), 10, 0.15);
  for (auto _ : state) benchmark::DoNotOptimize(chao1(frequency_counts(m)));
}
BENCHMARK(BM_Chao1FromMatrix)->Arg(300)->Arg(5000);

void BM_Bootstrap(benchmark::State& state) {
  auto m = capture(1000, 10, 0.15);
  for (auto _ : state) benchmark::DoNotOptimize(bootstrap_ci(m, static_cast<std::size_t>(state.range(0)), 0.95, 3));
}
BENCHMARK(BM_Bootstrap)->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_JaroWinkler(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(jaro_winkler("kinetic wafer systems", "kinetik wafer system"));
}
BENCHMARK(BM_JaroWinkler);

void BM_Resolve(benchmark::State& state) {
  auto corpus = make_alias_corpus(static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(0)), 5);
  for (auto _ : state) benchmark::DoNotOptimize(resolve(corpus.graph));
}
BENCHMARK(BM_Resolve)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_DistMultEpochs(benchmark::State& state) {
  World w = generate_world({});
  DistMultConfig cfg;
  cfg.epochs = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(train_distmult(w.truth.graph, cfg));
}
BENCHMARK(BM_DistMultEpochs)->Arg(10)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_SimulatedRun(benchmark::State& state) {
  SimulatedSetup setup = make_setup(generate_world({}));
  PipelineConfig cfg;
  cfg.strategy = static_cast<CrawlStrategy>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(run_simulated(cfg, setup));
}
BENCHMARK(BM_SimulatedRun)
    ->Arg(static_cast<int>(CrawlStrategy::Bfs))
    ->Arg(static_cast<int>(CrawlStrategy::Wkw))
    ->Unit(benchmark::kMillisecond)
    ->Iterations(2);

}  // namespace
BENCHMARK_MAIN();
