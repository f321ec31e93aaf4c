#include "acsm/dynamics.hpp"

#include <algorithm>
#include <cmath>

#include "acsm/parallel.hpp"

namespace acsm {
namespace {

void verlet_steps(const ChainModel& model, std::vector<double>& q,
                  std::vector<double>& p, std::vector<double>& force, double dt,
                  long n, double h0_scale, double h0, double& drift) {
  // Standard velocity Verlet; force holds F(q) on entry and exit.
  for (long s = 0; s < n; ++s) {
    const double half = 0.5 * dt;
    for (std::size_t j = 0; j < p.size(); ++j) p[j] += half * force[j];
    for (std::size_t j = 0; j < q.size(); ++j) q[j] += dt * p[j];
    model.forces(q, force);
    for (std::size_t j = 0; j < p.size(); ++j) p[j] += half * force[j];
    PhasePoint x;
    x.q = q;
    x.p = p;
    drift = std::max(drift, std::abs(model.hamiltonian(x) - h0) / h0_scale);
  }
}

std::vector<long> grid_to_steps(const std::vector<double>& t_grid, double dt) {
  if (t_grid.empty()) throw std::invalid_argument("time grid is empty");
  std::vector<long> steps(t_grid.size());
  for (std::size_t k = 0; k < t_grid.size(); ++k) {
    const double t = t_grid[k];
    if (!(t >= 0.0) || !std::isfinite(t)) {
      throw std::invalid_argument("grid times must be finite and >= 0");
    }
    const long n = std::lround(t / dt);
    if (std::abs(t - n * dt) > 1e-9 * std::max(t, dt)) {
      throw std::invalid_argument("grid times must be integer multiples of dt");
    }
    steps[k] = n;
    if (k > 0 && steps[k] <= steps[k - 1]) {
      throw std::invalid_argument("grid times must be strictly increasing");
    }
  }
  return steps;
}

void check_step_size(const ChainModel& model, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw std::invalid_argument("dt must be positive and finite");
  }
  if (dt * model.max_frequency() >= 0.5) {
    throw std::invalid_argument("dt too large for the fastest mode (dt*omega >= 0.5)");
  }
}

// Integrates a single ensemble member, sampling the observables at the given
// step counts. Returns the worst relative energy drift (never throws inside
// worker threads).
double run_member(const ChainModel& model, const PhasePoint& x0,
                  const Observable& f, const Observable* g, double dt,
                  const std::vector<long>& steps, double* f_out, double* g_out) {
  std::vector<double> q = x0.q, p = x0.p, force;
  model.forces(q, force);
  const double h0 = model.hamiltonian(x0);
  const double h0_scale = std::max(std::abs(h0), 1e-300);
  double drift = 0.0;
  long done = 0;
  PhasePoint x;
  for (std::size_t k = 0; k < steps.size(); ++k) {
    verlet_steps(model, q, p, force, dt, steps[k] - done, h0_scale, h0, drift);
    done = steps[k];
    x.q = q;
    x.p = p;
    f_out[k] = f.evaluate(model, x);
    if (g) g_out[k] = g->evaluate(model, x);
  }
  return drift;
}

double suggest_dt(double dt, double drift) {
  return dt * std::sqrt(kEnergyDriftBound / std::max(drift, 1e-300)) * 0.8;
}

struct EnsembleRun {
  std::vector<long> steps;
  std::size_t members = 0;
  std::vector<double> f0, g0;        // observable at t = 0 per member
  std::vector<double> fv, gv;        // member-major sampled values
};

EnsembleRun run_ensemble(const ChainModel& model, const SampleSet& sample,
                         const Observable& f, const Observable* g,
                         const std::vector<double>& t_grid, double dt,
                         int threads, std::size_t max_members) {
  check_step_size(model, dt);
  EnsembleRun run;
  run.steps = grid_to_steps(t_grid, dt);
  run.members = sample.n_points;
  if (max_members > 0) run.members = std::min(run.members, max_members);
  if (run.members == 0) throw std::invalid_argument("ensemble is empty");

  const std::size_t nt = run.steps.size();
  run.f0.resize(run.members);
  run.fv.resize(run.members * nt);
  if (g) {
    run.g0.resize(run.members);
    run.gv.resize(run.members * nt);
  }
  std::vector<double> drift(run.members, 0.0);

  parallel_blocks(run.members, threads,
                  [&](std::size_t, std::size_t begin, std::size_t end) {
                    for (std::size_t i = begin; i < end; ++i) {
                      const PhasePoint x0 = sample.point(i);
                      run.f0[i] = f.evaluate(model, x0);
                      if (g) run.g0[i] = g->evaluate(model, x0);
                      drift[i] = run_member(model, x0, f, g, dt, run.steps,
                                            run.fv.data() + i * nt,
                                            g ? run.gv.data() + i * nt : nullptr);
                    }
                  });

  const double worst = *std::max_element(drift.begin(), drift.end());
  if (worst > kEnergyDriftBound) {
    throw IntegratorError("energy drift " + std::to_string(worst) +
                              " exceeds the integrator bound",
                          suggest_dt(dt, worst));
  }
  return run;
}

struct CorrelationStats {
  EmpiricalCorrelation corr;
  // Jackknife replicate correlation values, [block][time].
  std::vector<std::vector<double>> replicates;
};

// C(t) = mean[f0 ft] - mean[f0]^2 with jackknife over contiguous member
// blocks; block b covers members [b*M/B, (b+1)*M/B).
CorrelationStats correlation_stats(const std::vector<double>& f0,
                                   const std::vector<double>& fv,
                                   const std::vector<double>& t_grid,
                                   int blocks) {
  const std::size_t m = f0.size();
  const std::size_t nt = t_grid.size();
  if (blocks < 2) throw std::invalid_argument("jackknife needs >= 2 blocks");
  if (m < 2 * static_cast<std::size_t>(blocks)) {
    throw std::invalid_argument("too few ensemble members for the requested blocks");
  }
  auto block_begin = [&](int b) { return (m * b) / blocks; };

  std::vector<double> s1(blocks, 0.0);
  std::vector<std::vector<double>> sp(blocks, std::vector<double>(nt, 0.0));
  for (int b = 0; b < blocks; ++b) {
    Accumulator a1;
    std::vector<Accumulator> ap(nt);
    for (std::size_t i = block_begin(b); i < block_begin(b + 1); ++i) {
      a1.add(f0[i]);
      for (std::size_t k = 0; k < nt; ++k) ap[k].add(f0[i] * fv[i * nt + k]);
    }
    s1[b] = a1.value();
    for (std::size_t k = 0; k < nt; ++k) sp[b][k] = ap[k].value();
  }

  double s1_tot = 0.0;
  std::vector<double> sp_tot(nt, 0.0);
  for (int b = 0; b < blocks; ++b) {
    s1_tot += s1[b];
    for (std::size_t k = 0; k < nt; ++k) sp_tot[k] += sp[b][k];
  }

  CorrelationStats st;
  st.corr.times = t_grid;
  st.corr.ensemble_size = m;
  st.corr.mean_f = s1_tot / m;
  st.corr.values.resize(nt);
  st.corr.stderr_c.resize(nt);
  for (std::size_t k = 0; k < nt; ++k) {
    st.corr.values[k] = sp_tot[k] / m - st.corr.mean_f * st.corr.mean_f;
  }

  st.replicates.assign(blocks, std::vector<double>(nt, 0.0));
  for (int b = 0; b < blocks; ++b) {
    const std::size_t mb = block_begin(b + 1) - block_begin(b);
    const std::size_t mp = m - mb;
    const double mean_p = (s1_tot - s1[b]) / mp;
    for (std::size_t k = 0; k < nt; ++k) {
      st.replicates[b][k] = (sp_tot[k] - sp[b][k]) / mp - mean_p * mean_p;
    }
  }
  for (std::size_t k = 0; k < nt; ++k) {
    Accumulator mean;
    for (int b = 0; b < blocks; ++b) mean.add(st.replicates[b][k]);
    const double jbar = mean.value() / blocks;
    Accumulator var;
    for (int b = 0; b < blocks; ++b) {
      const double d = st.replicates[b][k] - jbar;
      var.add(d * d);
    }
    st.corr.stderr_c[k] =
        std::sqrt(var.value() * (blocks - 1) / static_cast<double>(blocks));
  }
  return st;
}

double population_var(const std::vector<double>& v) {
  Accumulator m;
  for (double x : v) m.add(x);
  const double mean = m.value() / v.size();
  Accumulator ss;
  for (double x : v) ss.add((x - mean) * (x - mean));
  return ss.value() / v.size();
}

}  // namespace

double default_timestep(const ChainModel& model) {
  // Worst-phase Verlet energy oscillation is (omega*dt)^2/4; this choice puts
  // it near half the drift bound.
  return 0.0015 / model.max_frequency();
}

Trajectory integrate(const ChainModel& model, const PhasePoint& x0, double dt,
                     long n_steps) {
  check_step_size(model, dt);
  if (n_steps < 0) throw std::invalid_argument("n_steps must be >= 0");
  std::vector<double> q = x0.q, p = x0.p, force;
  model.forces(q, force);
  const double h0 = model.hamiltonian(x0);
  const double h0_scale = std::max(std::abs(h0), 1e-300);
  double drift = 0.0;
  verlet_steps(model, q, p, force, dt, n_steps, h0_scale, h0, drift);
  if (drift > kEnergyDriftBound) {
    throw IntegratorError("energy drift " + std::to_string(drift) +
                              " exceeds the integrator bound",
                          suggest_dt(dt, drift));
  }
  Trajectory out;
  out.final_state.q = std::move(q);
  out.final_state.p = std::move(p);
  out.dt = dt;
  out.n_steps = n_steps;
  out.energy_drift = drift;
  return out;
}

std::vector<double> integrate_observable(const ChainModel& model,
                                         const PhasePoint& x0,
                                         const Observable& f, double dt,
                                         int stride, long n_records,
                                         double* drift_out) {
  check_step_size(model, dt);
  if (stride < 1) throw std::invalid_argument("stride must be >= 1");
  if (n_records < 0) throw std::invalid_argument("n_records must be >= 0");
  std::vector<double> q = x0.q, p = x0.p, force;
  model.forces(q, force);
  const double h0 = model.hamiltonian(x0);
  const double h0_scale = std::max(std::abs(h0), 1e-300);
  double drift = 0.0;
  std::vector<double> values;
  values.reserve(n_records + 1);
  values.push_back(f.evaluate(model, x0));
  PhasePoint x;
  for (long r = 0; r < n_records; ++r) {
    verlet_steps(model, q, p, force, dt, stride, h0_scale, h0, drift);
    x.q = q;
    x.p = p;
    values.push_back(f.evaluate(model, x));
  }
  if (drift > kEnergyDriftBound) {
    throw IntegratorError("energy drift " + std::to_string(drift) +
                              " exceeds the integrator bound",
                          suggest_dt(dt, drift));
  }
  if (drift_out) *drift_out = drift;
  return values;
}

EmpiricalCorrelation empirical_autocorrelation(
    const ChainModel& model, const SampleSet& sample, const Observable& f,
    const std::vector<double>& t_grid, double dt, int blocks, int threads,
    std::size_t max_members) {
  const EnsembleRun run =
      run_ensemble(model, sample, f, nullptr, t_grid, dt, threads, max_members);
  return correlation_stats(run.f0, run.fv, t_grid, blocks).corr;
}

PairCorrelation empirical_pair_correlation(
    const ChainModel& model, const SampleSet& sample, const Observable& f,
    const Observable& g, const std::vector<double>& t_grid, double dt,
    int blocks, int threads, std::size_t max_members) {
  const EnsembleRun run =
      run_ensemble(model, sample, f, &g, t_grid, dt, threads, max_members);
  const CorrelationStats sf = correlation_stats(run.f0, run.fv, t_grid, blocks);
  const CorrelationStats sg = correlation_stats(run.g0, run.gv, t_grid, blocks);

  PairCorrelation pair;
  pair.first = sf.corr;
  pair.second = sg.corr;
  pair.sigma_f = std::sqrt(population_var(run.f0));
  pair.sigma_g = std::sqrt(population_var(run.g0));

  Accumulator mf, mg;
  for (std::size_t i = 0; i < run.members; ++i) {
    mf.add(run.f0[i]);
    mg.add(run.g0[i]);
  }
  const double mean_f = mf.value() / run.members;
  const double mean_g = mg.value() / run.members;
  Accumulator cov;
  for (std::size_t i = 0; i < run.members; ++i) {
    cov.add((run.f0[i] - mean_f) * (run.g0[i] - mean_g));
  }
  const double denom = pair.sigma_f * pair.sigma_g * run.members;
  pair.corr_fg = denom > 0.0 ? cov.value() / denom : 0.0;

  // Jackknife on the difference C_g - scale^2 C_f with the scale frozen from
  // the full sample.
  const double scale2 = pair.sigma_f > 0.0
                            ? (pair.sigma_g * pair.sigma_g) /
                                  (pair.sigma_f * pair.sigma_f)
                            : 0.0;
  const std::size_t nt = t_grid.size();
  const int b = static_cast<int>(sf.replicates.size());
  pair.stderr_diff.resize(nt);
  for (std::size_t k = 0; k < nt; ++k) {
    Accumulator mean;
    for (int i = 0; i < b; ++i) {
      mean.add(sg.replicates[i][k] - scale2 * sf.replicates[i][k]);
    }
    const double jbar = mean.value() / b;
    Accumulator var;
    for (int i = 0; i < b; ++i) {
      const double d = sg.replicates[i][k] - scale2 * sf.replicates[i][k] - jbar;
      var.add(d * d);
    }
    pair.stderr_diff[k] = std::sqrt(var.value() * (b - 1) / static_cast<double>(b));
  }
  return pair;
}

double truncation_sum(const MomentSequence& m, int order, double t) {
  if (order < 0 || order > m.max_order()) {
    throw std::invalid_argument("truncation order outside available moments");
  }
  const double t2 = t * t;
  double weight = 1.0;  // t^{2k} / (2k)!
  Accumulator acc;
  for (int k = 0; k <= order; ++k) {
    acc.add((k % 2 ? -1.0 : 1.0) * m.c[k] * weight);
    weight *= t2 / ((2.0 * k + 1.0) * (2.0 * k + 2.0));
  }
  return acc.value();
}

TruncationBoundsReport truncation_bounds_check(const EmpiricalCorrelation& corr,
                                               const MomentSequence& m,
                                               const std::vector<int>& orders,
                                               double n_sigma) {
  if (orders.empty()) throw std::invalid_argument("no truncation orders given");
  TruncationBoundsReport rep;
  rep.orders = orders;
  const std::size_t nt = corr.times.size();
  rep.s.assign(orders.size(), std::vector<double>(nt, 0.0));
  for (std::size_t oi = 0; oi < orders.size(); ++oi) {
    for (std::size_t k = 0; k < nt; ++k) {
      rep.s[oi][k] = truncation_sum(m, orders[oi], corr.times[k]);
    }
  }

  // Signed excess in sigma units: positive when the estimate crosses the
  // bound's side. Even orders bound from above, odd from below.
  auto excess = [&](std::size_t oi, std::size_t k) {
    const double diff = orders[oi] % 2
                            ? rep.s[oi][k] - corr.values[k]
                            : corr.values[k] - rep.s[oi][k];
    return diff / std::max(corr.stderr_c[k], 1e-300);
  };

  std::size_t good_prefix = 0;
  while (good_prefix < nt) {
    bool ok = true;
    for (std::size_t oi = 0; oi < orders.size() && ok; ++oi) {
      ok = excess(oi, good_prefix) <= n_sigma;
    }
    if (!ok) break;
    ++good_prefix;
  }
  rep.holds_anywhere = good_prefix > 0;
  rep.t_star = good_prefix > 0 ? corr.times[good_prefix - 1] : 0.0;
  rep.worst_violation_sigma = -n_sigma;
  for (std::size_t k = 0; k < good_prefix; ++k) {
    for (std::size_t oi = 0; oi < orders.size(); ++oi) {
      rep.worst_violation_sigma =
          std::max(rep.worst_violation_sigma, excess(oi, k) - n_sigma);
    }
  }
  return rep;
}

CorrelatedVariablesReport correlated_variables_check(
    const ChainModel& model, const SampleSet& sample, const Observable& f,
    const Observable& g, const std::vector<double>& t_grid, double dt,
    double n_sigma, int blocks, int threads, std::size_t max_members) {
  const PairCorrelation pair = empirical_pair_correlation(
      model, sample, f, g, t_grid, dt, blocks, threads, max_members);

  CorrelatedVariablesReport rep;
  rep.corr = pair.corr_fg;
  if (std::abs(rep.corr) <= 0.5) {
    rep.skipped = true;
    return rep;
  }
  rep.eps = std::sqrt(2.0 * (1.0 - std::abs(rep.corr)));
  rep.bound = (rep.eps * rep.eps + 2.0 * rep.eps) * pair.sigma_g * pair.sigma_g;

  const double scale2 = (pair.sigma_g * pair.sigma_g) /
                        (pair.sigma_f * pair.sigma_f);
  const std::size_t nt = t_grid.size();
  rep.difference.resize(nt);
  rep.allowance.resize(nt);
  rep.worst_margin = -1e300;
  for (std::size_t k = 0; k < nt; ++k) {
    rep.difference[k] = pair.second.values[k] - scale2 * pair.first.values[k];
    rep.allowance[k] = rep.bound + n_sigma * pair.stderr_diff[k];
    rep.worst_margin =
        std::max(rep.worst_margin, std::abs(rep.difference[k]) - rep.allowance[k]);
  }
  rep.holds = rep.worst_margin <= 0.0;
  return rep;
}

}  // namespace acsm
