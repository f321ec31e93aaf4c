#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "acsm/moment_engine.hpp"
#include "acsm/observable.hpp"

namespace acsm {

struct IntegratorError : std::runtime_error {
  IntegratorError(const std::string& what, double suggested_dt_)
      : std::runtime_error(what), suggested_dt(suggested_dt_) {}
  double suggested_dt;
};

inline constexpr double kEnergyDriftBound = 1e-6;

// Step size heuristic 0.0015/omega_max: keeps the Verlet energy oscillation,
// (omega*dt)^2/4 relative at the worst phase, under half the drift bound.
double default_timestep(const ChainModel& model);

struct Trajectory {
  PhasePoint final_state;
  double dt = 0.0;
  long n_steps = 0;
  double energy_drift = 0.0;  // max |H(t) - H(0)| / |H(0)| seen
};

// Symplectic velocity-Verlet integration. Requires dt * omega_max < 0.5 and
// rejects the run (with a suggested smaller dt) if the relative energy drift
// exceeds kEnergyDriftBound.
Trajectory integrate(const ChainModel& model, const PhasePoint& x0, double dt,
                     long n_steps);

// Same, recording f every `stride` steps: values[k] = f at t = k*stride*dt,
// n_records+1 entries including t = 0.
std::vector<double> integrate_observable(const ChainModel& model,
                                         const PhasePoint& x0,
                                         const Observable& f, double dt,
                                         int stride, long n_records,
                                         double* drift_out = nullptr);

struct EmpiricalCorrelation {
  std::vector<double> times;
  std::vector<double> values;
  std::vector<double> stderr_c;
  std::size_t ensemble_size = 0;
  double mean_f = 0.0;
};

// Ensemble autocorrelation over equilibrium initial conditions:
//   C(t) = mean[f(t) f(0)] - mean[f(0)]^2,
// with jackknife errors over ensemble blocks. Grid times must be integer
// multiples of dt (within 1e-9 relative); the worst energy drift of any
// member is subject to the integrator bound.
EmpiricalCorrelation empirical_autocorrelation(
    const ChainModel& model, const SampleSet& sample, const Observable& f,
    const std::vector<double>& t_grid, double dt, int blocks = 20,
    int threads = 1, std::size_t max_members = 0);

// Also evolves a second observable on the same trajectories.
struct PairCorrelation {
  EmpiricalCorrelation first;
  EmpiricalCorrelation second;
  double corr_fg = 0.0;  // static correlation at t = 0
  double sigma_f = 0.0, sigma_g = 0.0;
  std::vector<double> stderr_diff;  // jackknife on C_g - scale^2 C_f
};

PairCorrelation empirical_pair_correlation(
    const ChainModel& model, const SampleSet& sample, const Observable& f,
    const Observable& g, const std::vector<double>& t_grid, double dt,
    int blocks = 20, int threads = 1, std::size_t max_members = 0);

// Alternating truncations S_n(t) = sum_{k<=n} (-1)^k c_k t^{2k}/(2k)!
// sandwich the true autocorrelation: even n from above, odd n from below.
// The check records the largest grid time through which every tested order
// respects its side within n_sigma jackknife deviations.
struct TruncationBoundsReport {
  std::vector<int> orders;
  std::vector<std::vector<double>> s;  // [order][time]
  double t_star = 0.0;
  bool holds_anywhere = false;
  // Worst signed violation in sigma units inside [0, t_star] (<= 0 if clean).
  double worst_violation_sigma = 0.0;
};

double truncation_sum(const MomentSequence& m, int order, double t);
TruncationBoundsReport truncation_bounds_check(const EmpiricalCorrelation& corr,
                                               const MomentSequence& m,
                                               const std::vector<int>& orders,
                                               double n_sigma = 3.0);

// Near-perfectly correlated observables have near-proportional
// autocorrelations: with |corr(f,g)| = 1 - eps^2/2 and ft = sign * (sigma_g /
// sigma_f) * f,
//   |C_g(t) - C_ft(t)| <= (eps^2 + 2 eps) sigma_g^2.
// Checked on the empirical estimates with an n_sigma jackknife allowance;
// skipped (skipped = true) when |corr| <= 1/2.
struct CorrelatedVariablesReport {
  bool skipped = false;
  double corr = 0.0;
  double eps = 0.0;
  double bound = 0.0;  // (eps^2 + 2 eps) sigma_g^2
  std::vector<double> difference;  // C_g - scale^2 C_f per grid time
  std::vector<double> allowance;   // bound + n_sigma * stderr per grid time
  double worst_margin = 0.0;       // max(|difference| - allowance); <= 0 ok
  bool holds = false;
};

CorrelatedVariablesReport correlated_variables_check(
    const ChainModel& model, const SampleSet& sample, const Observable& f,
    const Observable& g, const std::vector<double>& t_grid, double dt,
    double n_sigma = 4.0, int blocks = 20, int threads = 1,
    std::size_t max_members = 0);

}  // namespace acsm
