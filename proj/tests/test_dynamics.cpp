#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "acsm/dynamics.hpp"
#include "acsm/gibbs_sampler.hpp"
#include "doctest.h"

using namespace acsm;

namespace {

FpuParams harmonic_params(int n, double temperature = 1.0) {
  FpuParams p;
  p.n_particles = n;
  p.alpha = 0.0;
  p.beta = 0.0;
  p.temperature = temperature;
  return p;
}

FpuParams fpu_params(int n, double temperature) {
  FpuParams p;
  p.n_particles = n;
  p.alpha = 0.25;
  p.beta = 0.25;
  p.temperature = temperature;
  return p;
}

MonomialTerm term(double coeff, std::vector<std::pair<int, int>> q_pows,
                  std::vector<std::pair<int, int>> p_pows = {}) {
  MonomialTerm t;
  t.coeff = coeff;
  t.q_pows = std::move(q_pows);
  t.p_pows = std::move(p_pows);
  return t;
}

// Exact autocorrelation of q_i for the linear chain in equilibrium:
// C(t) = T sum_k V(i,k)^2 / omega_k^2 * cos(omega_k t).
double harmonic_position_corr(const ChainModel& model, int i, double t) {
  const auto& omega = model.mode_frequencies();
  const auto& v = model.mode_vectors();
  double c = 0.0;
  for (int k = 0; k < model.size(); ++k) {
    c += v(i, k) * v(i, k) / (omega[k] * omega[k]) * std::cos(omega[k] * t);
  }
  return c * model.params().temperature;
}

}  // namespace

TEST_CASE("harmonic single site rotates at unit frequency") {
  ChainModel model(harmonic_params(1));
  PhasePoint x0;
  x0.q = {0.7};
  x0.p = {0.0};

  const double dt = 1e-3;
  const long n = 1571;  // t close to pi/2
  const Trajectory traj = integrate(model, x0, dt, n);
  const double t = dt * n;
  CHECK(traj.final_state.q[0] == doctest::Approx(0.7 * std::cos(t)).epsilon(1e-5));
  CHECK(traj.final_state.p[0] == doctest::Approx(-0.7 * std::sin(t)).epsilon(1e-5));
  CHECK(traj.dt == dt);
  CHECK(traj.n_steps == n);
  // worst-phase energy oscillation of the scheme is (omega dt)^2 / 4
  CHECK(traj.energy_drift > 1e-7);
  CHECK(traj.energy_drift < 1e-6);
  CHECK(traj.energy_drift == doctest::Approx(2.5e-7).epsilon(0.05));
}

TEST_CASE("default step size keeps a full period inside the drift bound") {
  ChainModel model(harmonic_params(8));
  const double dt = default_timestep(model);
  CHECK(dt == doctest::Approx(0.0015 / model.max_frequency()));

  PhasePoint x0 = PhasePoint::zero(8);
  x0.q[3] = 0.5;
  x0.p[1] = -0.3;
  const long n = static_cast<long>(2.0 * M_PI / dt) + 1;
  const Trajectory traj = integrate(model, x0, dt, n);
  CHECK(traj.energy_drift < kEnergyDriftBound);
}

TEST_CASE("too coarse a step is rejected with a usable suggestion") {
  ChainModel model(harmonic_params(1));
  PhasePoint x0;
  x0.q = {1.0};
  x0.p = {0.0};

  try {
    integrate(model, x0, 0.05, 1000);
    FAIL("drift bound should reject dt = 0.05");
  } catch (const IntegratorError& e) {
    CHECK(e.suggested_dt < 0.05);
    CHECK(e.suggested_dt > 0.0);
    const Trajectory retry = integrate(model, x0, e.suggested_dt, 1000);
    CHECK(retry.energy_drift < kEnergyDriftBound);
  }

  CHECK_THROWS_AS(integrate(model, x0, 0.6, 10), std::invalid_argument);
  CHECK_THROWS_AS(integrate(model, x0, -1e-3, 10), std::invalid_argument);
  CHECK_THROWS_AS(integrate(model, x0, 1e-3, -1), std::invalid_argument);
}

TEST_CASE("observable recording along a trajectory") {
  ChainModel model(harmonic_params(1));
  PhasePoint x0;
  x0.q = {0.7};
  x0.p = {0.0};

  double drift = 0.0;
  const auto values = integrate_observable(model, x0, Observable::position(0),
                                           1e-3, 50, 10, &drift);
  REQUIRE(values.size() == 11);
  for (int k = 0; k <= 10; ++k) {
    CHECK(values[k] ==
          doctest::Approx(0.7 * std::cos(0.05 * k)).epsilon(1e-6));
  }
  CHECK(drift < kEnergyDriftBound);
  CHECK_THROWS_AS(
      integrate_observable(model, x0, Observable::position(0), 1e-3, 0, 5),
      std::invalid_argument);
}

TEST_CASE("ensemble autocorrelation matches the harmonic closed form") {
  ChainModel model(harmonic_params(2, 0.7));
  const SampleSet sample = draw_sample(model, 404, 8200);

  const double dt = default_timestep(model);
  std::vector<double> grid;
  for (int k = 0; k <= 4; ++k) grid.push_back(270.0 * k * dt);

  const EmpiricalCorrelation corr = empirical_autocorrelation(
      model, sample, Observable::position(0), grid, dt);
  REQUIRE(corr.values.size() == 5);
  CHECK(corr.ensemble_size == 8200);
  CHECK(std::abs(corr.mean_f) < 0.1);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double expect = harmonic_position_corr(model, 0, grid[k]);
    CHECK(corr.stderr_c[k] > 0.0);
    CHECK(std::abs(corr.values[k] - expect) < 6.0 * corr.stderr_c[k]);
  }
}

TEST_CASE("ensemble runs are thread invariant") {
  ChainModel model(harmonic_params(2, 0.7));
  const SampleSet sample = draw_sample(model, 404, 8200);
  const double dt = default_timestep(model);
  const std::vector<double> grid = {0.0, 400.0 * dt};

  const EmpiricalCorrelation a = empirical_autocorrelation(
      model, sample, Observable::position(0), grid, dt, 20, 1);
  const EmpiricalCorrelation b = empirical_autocorrelation(
      model, sample, Observable::position(0), grid, dt, 20, 3);
  CHECK(a.values == b.values);
  CHECK(a.stderr_c == b.stderr_c);
  CHECK(a.mean_f == b.mean_f);
}

TEST_CASE("time grid validation") {
  ChainModel model(harmonic_params(2));
  const SampleSet sample = draw_sample(model, 9, 100);
  const Observable f = Observable::position(0);
  const double dt = 1e-3;

  CHECK_THROWS_AS(empirical_autocorrelation(model, sample, f, {}, dt),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      empirical_autocorrelation(model, sample, f, {2.5 * dt}, dt),
      std::invalid_argument);
  CHECK_THROWS_AS(
      empirical_autocorrelation(model, sample, f, {-dt}, dt),
      std::invalid_argument);
  CHECK_THROWS_AS(
      empirical_autocorrelation(model, sample, f, {4 * dt, 2 * dt}, dt),
      std::invalid_argument);
  CHECK_THROWS_AS(
      empirical_autocorrelation(model, sample, f, {2 * dt, 2 * dt}, dt),
      std::invalid_argument);
  // 100 members cannot fill 60 jackknife blocks
  CHECK_THROWS_AS(
      empirical_autocorrelation(model, sample, f, {dt}, dt, 60),
      std::invalid_argument);
}

TEST_CASE("ensemble runs inherit the drift gate") {
  ChainModel model(fpu_params(2, 0.5));
  const SampleSet sample = draw_sample(model, 12, 60);

  try {
    empirical_autocorrelation(model, sample, Observable::position(0),
                              {0.2, 1.0}, 0.2, 5);
    FAIL("coarse ensemble step should be rejected");
  } catch (const IntegratorError& e) {
    CHECK(e.suggested_dt < 0.2);
    const double dt = e.suggested_dt;
    CHECK_NOTHROW(empirical_autocorrelation(
        model, sample, Observable::position(0), {200.0 * dt, 1000.0 * dt}, dt, 5));
  }
}

TEST_CASE("truncation sums evaluate the alternating series") {
  MomentSequence m;
  m.c = {1.2, 0.8, 2.0, 0.5};
  m.stderr_c.assign(4, 0.0);

  const double t = 0.9;
  const double t2 = t * t;
  CHECK(truncation_sum(m, 0, t) == doctest::Approx(1.2));
  CHECK(truncation_sum(m, 1, t) == doctest::Approx(1.2 - 0.8 * t2 / 2.0));
  CHECK(truncation_sum(m, 2, t) ==
        doctest::Approx(1.2 - 0.8 * t2 / 2.0 + 2.0 * t2 * t2 / 24.0));
  CHECK(truncation_sum(m, 3, t) ==
        doctest::Approx(1.2 - 0.8 * t2 / 2.0 + 2.0 * t2 * t2 / 24.0 -
                        0.5 * t2 * t2 * t2 / 720.0));
  CHECK_THROWS_AS(truncation_sum(m, 4, t), std::invalid_argument);
  CHECK_THROWS_AS(truncation_sum(m, -1, t), std::invalid_argument);
}

TEST_CASE("truncation envelopes sandwich an exact correlation") {
  // Single line at omega = 1: C(t) = 0.8 cos t and c_k = 0.8 for all k.
  MomentSequence m;
  m.c.assign(8, 0.8);
  m.stderr_c.assign(8, 0.0);

  EmpiricalCorrelation corr;
  for (int k = 0; k <= 12; ++k) corr.times.push_back(0.25 * k);
  for (double t : corr.times) corr.values.push_back(0.8 * std::cos(t));
  corr.stderr_c.assign(corr.times.size(), 1e-12);
  corr.ensemble_size = 1;

  const TruncationBoundsReport rep =
      truncation_bounds_check(corr, m, {1, 2, 3, 4}, 3.0);
  CHECK(rep.holds_anywhere);
  CHECK(rep.t_star == corr.times.back());
  CHECK(rep.worst_violation_sigma <= -3.0 + 1e-9);
  REQUIRE(rep.s.size() == 4);

  // Odd truncations lie below the curve, even ones above, strictly away from
  // t = 0.
  for (std::size_t k = 1; k < corr.times.size(); ++k) {
    CHECK(rep.s[0][k] < corr.values[k]);   // order 1
    CHECK(rep.s[1][k] > corr.values[k]);   // order 2
    CHECK(rep.s[2][k] < corr.values[k]);   // order 3
  }

  // Push one estimate above the order-2 envelope: the prefix must stop at the
  // sample before it.
  EmpiricalCorrelation broken = corr;
  const std::size_t bad = 6;
  broken.values[bad] =
      truncation_sum(m, 2, broken.times[bad]) + 1e-3;
  const TruncationBoundsReport stopped =
      truncation_bounds_check(broken, m, {1, 2, 3, 4}, 3.0);
  CHECK(stopped.holds_anywhere);
  CHECK(stopped.t_star == corr.times[bad - 1]);
  CHECK(stopped.worst_violation_sigma <= 0.0);

  // A violation at the very first grid time leaves no valid window.
  EmpiricalCorrelation dead = corr;
  dead.values[0] = truncation_sum(m, 2, dead.times[0]) + 1.0;
  const TruncationBoundsReport none =
      truncation_bounds_check(dead, m, {2}, 3.0);
  CHECK(!none.holds_anywhere);
  CHECK(none.t_star == 0.0);

  CHECK_THROWS_AS(truncation_bounds_check(corr, m, {}, 3.0),
                  std::invalid_argument);
}

TEST_CASE("proportional observables have proportional correlations") {
  ChainModel model(harmonic_params(2, 0.7));
  const SampleSet sample = draw_sample(model, 77, 3000);
  const double dt = default_timestep(model);
  const std::vector<double> grid = {0.0, 200.0 * dt, 400.0 * dt};

  const Observable f = Observable::custom({term(1.0, {{0, 1}})});
  const Observable g = Observable::custom({term(2.0, {{0, 1}})});
  const PairCorrelation pair =
      empirical_pair_correlation(model, sample, f, g, grid, dt);

  CHECK(pair.corr_fg == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(pair.sigma_g == doctest::Approx(2.0 * pair.sigma_f).epsilon(1e-13));
  for (std::size_t k = 0; k < grid.size(); ++k) {
    CHECK(pair.second.values[k] ==
          doctest::Approx(4.0 * pair.first.values[k]).epsilon(1e-12));
    CHECK(pair.stderr_diff[k] < 1e-14);
  }

  const CorrelatedVariablesReport rep = correlated_variables_check(
      model, sample, f, g, grid, dt);
  CHECK(!rep.skipped);
  CHECK(rep.holds);
  CHECK(rep.eps == doctest::Approx(0.0));
  CHECK(rep.worst_margin <= 0.0);
}

TEST_CASE("nearly proportional observables stay within the bound") {
  ChainModel model(harmonic_params(2, 0.7));
  const SampleSet sample = draw_sample(model, 78, 3000);
  const double dt = default_timestep(model);
  const std::vector<double> grid = {0.0, 200.0 * dt, 400.0 * dt};

  const Observable f = Observable::custom({term(1.0, {{0, 2}})});
  const Observable g = Observable::custom(
      {term(1.0, {{0, 2}}), term(0.05, {}, {{1, 2}})});

  const CorrelatedVariablesReport rep =
      correlated_variables_check(model, sample, f, g, grid, dt);
  CHECK(!rep.skipped);
  CHECK(rep.corr > 0.9);
  CHECK(rep.holds);
  CHECK(rep.bound > 0.0);

  // Statistically independent observables are out of the theorem's reach.
  const CorrelatedVariablesReport indep = correlated_variables_check(
      model, sample, Observable::position(0), Observable::momentum(0),
      {0.0, 100.0 * dt}, dt, 4.0, 20, 1, 1000);
  CHECK(indep.skipped);
  CHECK(std::abs(indep.corr) < 0.5);
}
