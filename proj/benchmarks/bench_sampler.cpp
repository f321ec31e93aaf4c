#include <benchmark/benchmark.h>

#include <acsm/fpu_model.hpp>
#include <acsm/gibbs_sampler.hpp>

namespace {

acsm::ChainModel make_model(int n, double temperature) {
  acsm::FpuParams p;
  p.n_particles = n;
  p.alpha = 0.25;
  p.beta = 0.25;
  p.temperature = temperature;
  return acsm::ChainModel(p);
}

// Equilibrium draws; counter is points per second, so chains of different
// size compare directly.
void draw_points(benchmark::State& state) {
  const auto model = make_model(static_cast<int>(state.range(0)), 0.5);
  std::uint64_t seed = 1;
  for (auto _ : state) {
    const acsm::SampleSet s = acsm::draw_sample(model, seed++, 4096);
    benchmark::DoNotOptimize(s.q.data());
  }
  state.SetItemsProcessed(state.iterations() * 4096);
}
BENCHMARK(draw_points)->Arg(8)->Arg(32)->Arg(64);

// Rejection pressure grows as the quartic term stiffens relative to T.
void draw_points_cold(benchmark::State& state) {
  const auto model = make_model(32, 1e-4);
  std::uint64_t seed = 1;
  for (auto _ : state) {
    const acsm::SampleSet s = acsm::draw_sample(model, seed++, 4096);
    benchmark::DoNotOptimize(s.q.data());
  }
  state.SetItemsProcessed(state.iterations() * 4096);
}
BENCHMARK(draw_points_cold);

}  // namespace

BENCHMARK_MAIN();
