#include <benchmark/benchmark.h>

#include <acsm/criteria.hpp>
#include <acsm/moment_engine.hpp>
#include <acsm/reference_functions.hpp>
#include <acsm/stieltjes.hpp>

namespace {

// Exact-rational Hankel determinants; the gate every moment file passes.
void hankel_gate(benchmark::State& state) {
  const acsm::MomentSequence m =
      acsm::sech_moments(1.0, static_cast<int>(state.range(0)));
  for (auto _ : state) {
    const acsm::HankelReport rep = acsm::hankel_check(m);
    benchmark::DoNotOptimize(rep.sign_h.data());
  }
}
BENCHMARK(hankel_gate)->Arg(8)->Arg(12)->Arg(16);

// Moments -> atoms through the arbitrary-precision three-term recurrence.
void atoms_from_moments(benchmark::State& state) {
  const int order = static_cast<int>(state.range(0));
  const acsm::MomentSequence m = acsm::sech_moments(1.0, 2 * order);
  for (auto _ : state) {
    const acsm::SpectralApproximant a =
        acsm::quadrature_from_moments(m, order);
    benchmark::DoNotOptimize(a.atoms.data());
  }
}
BENCHMARK(atoms_from_moments)->Arg(4)->Arg(6)->Arg(8);

// Finite-difference table with propagated uncertainties, 512-bit path.
void difference_table(benchmark::State& state) {
  const int p_max = static_cast<int>(state.range(0));
  const acsm::CompactMoments cm = acsm::sech_compact_moments(1.0, p_max);
  for (auto _ : state) {
    const acsm::DifferenceCriterionReport rep =
        acsm::hausdorff_difference_report(cm, p_max, 2);
    benchmark::DoNotOptimize(rep.levels.data());
  }
}
BENCHMARK(difference_table)->Arg(16)->Arg(24)->Arg(32);

}  // namespace

BENCHMARK_MAIN();
