#include <benchmark/benchmark.h>

#include <acsm/fpu_model.hpp>
#include <acsm/gibbs_sampler.hpp>
#include <acsm/lie_derivatives.hpp>
#include <acsm/moment_engine.hpp>
#include <acsm/observable.hpp>

namespace {

struct Fixture {
  acsm::ChainModel model;
  acsm::PhasePoint x;

  explicit Fixture(int n) : model(make(n)), x(first_point()) {}

  static acsm::FpuParams params(int n) {
    acsm::FpuParams p;
    p.n_particles = n;
    p.alpha = 0.25;
    p.beta = 0.25;
    p.temperature = 0.5;
    return p;
  }
  static acsm::ChainModel make(int n) { return acsm::ChainModel(params(n)); }
  acsm::PhasePoint first_point() const {
    return acsm::draw_sample(model, 7, 1).point(0);
  }
};

// Flow Taylor coefficients; cost is O(order^2 * N) from the truncated
// products on the bond jets.
void flow_jet(benchmark::State& state) {
  const Fixture f(32);
  const int order = static_cast<int>(state.range(0));
  for (auto _ : state) {
    const acsm::TrajectoryJets j = acsm::trajectory_jet(f.model, f.x, order);
    benchmark::DoNotOptimize(j.q.data());
  }
}
BENCHMARK(flow_jet)->Arg(4)->Arg(8)->Arg(16);

// Full observable derivative list as used by the moment estimator.
void derivative_list(benchmark::State& state) {
  const Fixture f(32);
  const acsm::Observable etilde = acsm::Observable::low_mode_energy();
  const int max_n = static_cast<int>(state.range(0));
  for (auto _ : state) {
    const std::vector<double> d =
        acsm::lie_derivatives(f.model, f.x, etilde, max_n);
    benchmark::DoNotOptimize(d.data());
  }
}
BENCHMARK(derivative_list)->Arg(4)->Arg(8);

}  // namespace

BENCHMARK_MAIN();
