// Acceptance gate. Eleven numbered criteria, one [PASS]/[FAIL] line each,
// exit code = number of failures. `--only N` runs a single criterion.
//
// The chain scans are expensive, so their moment estimates are cached under
// ACSM_ACCEPTANCE_CACHE keyed by the run parameters; delete that directory to
// force a recompute. All tolerances are pinned here, next to the check that
// uses them.
#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "acsm/criteria.hpp"
#include "acsm/dynamics.hpp"
#include "acsm/fpu_model.hpp"
#include "acsm/gibbs_sampler.hpp"
#include "acsm/lie_derivatives.hpp"
#include "acsm/moment_engine.hpp"
#include "acsm/reference_functions.hpp"
#include "acsm/stieltjes.hpp"

namespace fs = std::filesystem;
using namespace acsm;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* pattern, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, pattern);
  std::vsnprintf(buf, sizeof(buf), pattern, ap);
  va_end(ap);
  return buf;
}

const fs::path& cache_dir() {
  static const fs::path dir = [] {
    fs::path p(ACSM_ACCEPTANCE_CACHE);
    fs::create_directories(p);
    return p;
  }();
  return dir;
}

FpuParams chain_params(int n, double alpha, double beta, double temperature) {
  FpuParams p;
  p.n_particles = n;
  p.alpha = alpha;
  p.beta = beta;
  p.temperature = temperature;
  return p;
}

// Builds (or reloads) a moment estimate for the given run. The cache file is
// trusted only if every identifying field matches.
MomentEstimate cached_moments(
    const std::string& key, const FpuParams& params, std::uint64_t seed,
    std::size_t n_points, int max_n,
    const std::function<Observable(const ChainModel&, const SampleSet&)>& make_f) {
  const fs::path path = cache_dir() / (key + ".json");
  if (fs::exists(path)) {
    try {
      MomentEstimate est = read_moment_file(path.string());
      const auto& m = est.moments;
      if (m.params && m.params->n_particles == params.n_particles &&
          m.params->alpha == params.alpha && m.params->beta == params.beta &&
          m.params->temperature == params.temperature && m.seed == seed &&
          m.n_samples == n_points && m.max_order() >= max_n &&
          !est.jackknife_c.empty()) {
        return est;
      }
    } catch (const std::exception&) {
      // stale or unreadable cache entry; fall through and recompute
    }
  }
  const ChainModel model(params);
  const SampleSet sample = draw_sample(model, seed, n_points);
  const Observable f = make_f(model, sample);
  MomentEstimate est = estimate_moments(model, sample, f, max_n);
  write_moment_file(path.string(), est, key);
  return est;
}

Observable projected_low_mode(const ChainModel& model, const SampleSet& sample) {
  return Observable::low_mode_energy_projected(estimate_projection(model, sample));
}

MomentSequence atoms_to_moments(const std::vector<SpectralAtom>& atoms, int max_order) {
  MomentSequence m;
  for (int n = 0; n <= max_order; ++n) {
    double c = 0.0;
    for (const auto& a : atoms) c += a.rho * std::pow(a.omega, 2.0 * n);
    m.c.push_back(c);
  }
  m.stderr_c.assign(m.c.size(), 0.0);
  m.n_samples = 1;
  m.observable = "synthetic";
  m.source = "analytic";
  return m;
}

// Largest-residue atom of the highest quadrature order the sequence admits,
// capped at max_n.
struct Dominant {
  double omega = 0.0;
  double fraction = 0.0;
  int order = 0;
};

Dominant dominant_atom(const MomentSequence& m, int max_n) {
  for (int n = max_n; n >= 1; --n) {
    SpectralApproximant a;
    try {
      a = quadrature_from_moments(m, n);
    } catch (const QuadratureError&) {
      continue;
    }
    double total = 0.0;
    const SpectralAtom* best = &a.atoms[0];
    for (const auto& atom : a.atoms) {
      total += atom.rho;
      if (atom.rho > best->rho) best = &atom;
    }
    return {best->omega, best->rho / total, n};
  }
  throw QuadratureError("no quadrature order is admissible", 1, 0);
}

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

// --- shared chain-scan runs ---------------------------------------------------

constexpr double kScanTemps[] = {1e-5, 1e-4, 1e-3, 1e-2};

MomentEstimate scan_run(double temperature) {
  std::ostringstream key;
  key << "scan_T" << temperature;
  const int seed_index = temperature == 1e-5   ? 11
                         : temperature == 1e-4 ? 12
                         : temperature == 1e-3 ? 13
                                               : 14;
  return cached_moments(key.str(), chain_params(40, 0.25, 0.25, temperature),
                        seed_index, 200000, 8, projected_low_mode);
}

// --- criteria ------------------------------------------------------------------

// Single harmonic site with the pinned-free boundary: omega = 1 exactly, so
// every derivative variance of f = q equals T and the spectral measure is one
// atom at (1, T).
Outcome c1_harmonic_exactness() {
  const double temperature = 0.8;
  const MomentEstimate est =
      cached_moments("harmonic_n1", chain_params(1, 0.0, 0.0, temperature), 5,
                     400000, 6, [](const ChainModel&, const SampleSet&) {
                       return Observable::position(0);
                     });

  for (int n = 0; n <= 6; ++n) {
    const double dev = std::abs(est.moments.c[n] - temperature);
    if (dev > 3.0 * est.moments.stderr_c[n]) {
      return {false, fmt("c_%d = %.6g is %.2f stderr from %g", n, est.moments.c[n],
                         dev / est.moments.stderr_c[n], temperature)};
    }
  }

  const SpectralApproximant pole = quadrature_from_moments(est.moments, 1);
  const double omega = pole.atoms[0].omega;
  std::vector<double> reps;
  for (const auto& rc : est.jackknife_c) reps.push_back(std::sqrt(rc[1] / rc[0]));
  double mean = 0.0;
  for (double r : reps) mean += r;
  mean /= reps.size();
  double var = 0.0;
  for (double r : reps) var += (r - mean) * (r - mean);
  const double band = 3.0 * std::sqrt(var * (reps.size() - 1) / reps.size());
  if (std::abs(omega - 1.0) > band) {
    return {false, fmt("pole omega = %.6g outside the jackknife band %.3g", omega, band)};
  }

  // Reconstruction from the exact one-line sequence against T cos(t) over
  // three periods.
  MomentSequence exact;
  exact.c.assign(9, temperature);
  exact.stderr_c.assign(9, 0.0);
  const SpectralApproximant one = quadrature_from_moments(exact, 1);
  double worst = 0.0;
  for (double t = 0.0; t <= 6.0 * M_PI; t += 0.05) {
    const double err =
        std::abs(correlation_reconstruction(one, t) - temperature * std::cos(t));
    worst = std::max(worst, err / temperature);
  }
  if (worst > 1e-3) {
    return {false, fmt("reconstruction off by %.3g relative", worst)};
  }
  return {true, fmt("omega = %.6f (band %.1e), reconstruction error %.1e", omega,
                    band, worst)};
}

Outcome c2_two_atom_recovery() {
  const std::vector<SpectralAtom> truth = {{1.0, 0.7}, {2.0, 0.3}};
  const MomentSequence m = atoms_to_moments(truth, 3);
  const SpectralApproximant rec = quadrature_from_moments(m, 2);
  for (int k = 0; k < 2; ++k) {
    const double eo = std::abs(rec.atoms[k].omega - truth[k].omega) / truth[k].omega;
    const double er = std::abs(rec.atoms[k].rho - truth[k].rho) / truth[k].rho;
    if (eo > 1e-12 || er > 1e-12) {
      return {false, fmt("atom %d recovered to (%.17g, %.17g)", k, rec.atoms[k].omega,
                         rec.atoms[k].rho)};
    }
  }

  // Interlacing across orders 1 -> 2 -> 3 on a three-atom extension, checked
  // in the u = omega^2 variable the quadrature works in.
  const std::vector<SpectralAtom> three = {{1.0, 0.55}, {2.0, 0.3}, {3.0, 0.15}};
  const MomentSequence m3 = atoms_to_moments(three, 5);
  std::vector<SpectralApproximant> by_order;
  for (int n = 1; n <= 3; ++n) by_order.push_back(quadrature_from_moments(m3, n));
  for (int n = 1; n <= 2; ++n) {
    const auto& lo = by_order[n - 1].atoms;
    const auto& hi = by_order[n].atoms;
    for (int i = 0; i < n; ++i) {
      const double u = lo[i].omega * lo[i].omega;
      const double ul = hi[i].omega * hi[i].omega;
      const double ur = hi[i + 1].omega * hi[i + 1].omega;
      if (!(ul < u && u < ur)) {
        return {false, fmt("order %d node %d does not interlace", n, i)};
      }
    }
  }
  double worst3 = 0.0;
  for (int k = 0; k < 3; ++k) {
    worst3 = std::max(worst3,
                      std::abs(by_order[2].atoms[k].omega - three[k].omega));
  }
  return {true, fmt("recovery at 1e-12, interlacing 1->2->3, order-3 nodes off %.1e",
                    worst3)};
}

Outcome c3_tuple_enumeration() {
  // The ordered weight-5 triple list, exactly as documented for the
  // composition rule.
  const std::vector<std::vector<std::int64_t>> expected = {
      {0, 1, 1}, {2, 0, 1}, {1, 2, 0}, {3, 1, 0}, {5, 0, 0}};
  std::vector<std::vector<std::int64_t>> got;
  DerivativePartition part = first_partition(3, 5);
  while (true) {
    got.push_back(part.k);
    if (!next_partition(part)) break;
  }
  if (got != expected) {
    return {false, fmt("weight-5 listing has %zu tuples or wrong order", got.size())};
  }

  // Count check against a direct recursion over admissible tuples.
  std::function<long(int, int)> count = [&](int n, int s) -> long {
    if (n == 1) return 1;  // (s) is the only length-1 tuple
    long total = 0;
    for (int kn = 0; kn * n <= s; ++kn) total += count(n - 1, s - n * kn);
    return total;
  };
  for (int n = 1; n <= 12; ++n) {
    for (int s = 1; s <= 12; ++s) {
      long enumerated = 0;
      DerivativePartition p = first_partition(n, s);
      while (true) {
        std::int64_t weight = 0;
        for (int j = 0; j < n; ++j) weight += (j + 1) * p.k[j];
        if (weight != s) return {false, fmt("tuple with weight %lld in set (%d,%d)",
                                            static_cast<long long>(weight), n, s)};
        ++enumerated;
        if (!next_partition(p)) break;
      }
      if (enumerated != count(n, s)) {
        return {false, fmt("|set(%d,%d)| = %ld, brute force %ld", n, s, enumerated,
                           count(n, s))};
      }
    }
  }
  return {true, "weight-5 listing exact, counts match brute force for n,s <= 12"};
}

Outcome c4_sech_fixture() {
  const MomentSequence m = sech_moments(1.0, 12);
  const HankelReport gate = hankel_check(m);
  if (gate.precision_bits < 512) {
    return {false, fmt("hankel check ran at %d bits", gate.precision_bits)};
  }
  for (int n = 0; n <= 6; ++n) {
    if (gate.sign_h[n] != 1) return {false, fmt("H_%d sign %d", n, gate.sign_h[n])};
  }
  for (int n = 0; n <= 5; ++n) {
    if (gate.sign_h1[n] != 1) return {false, fmt("H1_%d sign %d", n, gate.sign_h1[n])};
  }
  if (gate.first_negative_order) {
    return {false, fmt("negative determinant at order %d", *gate.first_negative_order)};
  }

  // The exact 4-node truncation error is 3.2e-3 on [0, 1.5] and 5.2e-2 on
  // [0, 2] (the spectral tail is heavy), so the tolerances sit just above the
  // attainable level on each window.
  const SpectralApproximant four = quadrature_from_moments(m, 4);
  double worst_inner = 0.0, worst = 0.0;
  for (double t = 0.0; t <= 2.0; t += 0.05) {
    const double err =
        std::abs(correlation_reconstruction(four, t) - 1.0 / std::cosh(t));
    if (t <= 1.5) worst_inner = std::max(worst_inner, err);
    worst = std::max(worst, err);
  }
  if (worst_inner > 5e-3 || worst > 6e-2) {
    return {false, fmt("reconstruction off by %.3g on [0,1.5], %.3g on [0,2]",
                       worst_inner, worst)};
  }

  std::vector<SpectralApproximant> by_order;
  for (int n = 2; n <= 4; ++n) by_order.push_back(quadrature_from_moments(m, n));
  const IsolationReport iso = isolation_diagnostic(by_order);
  if (iso.verdict != "dense-indication") {
    return {false, "isolation verdict " + iso.verdict};
  }
  return {true, fmt("hankel positive to n=6, reconstruction error %.1e, %s", worst,
                    iso.verdict.c_str())};
}

Outcome c5_frequency_scaling() {
  std::vector<double> log_t, log_inv_omega;
  std::string detail;
  for (double temperature : kScanTemps) {
    const MomentEstimate est = scan_run(temperature);
    const Dominant dom = dominant_atom(est.moments, 4);
    log_t.push_back(std::log(temperature));
    log_inv_omega.push_back(std::log(1.0 / dom.omega));
    detail += fmt("T=%g: omega=%.4g (order %d)  ", temperature, dom.omega, dom.order);
  }
  const double slope = fit_slope(log_t, log_inv_omega);
  const bool pass = std::abs(slope - (-0.5)) <= 0.1;
  return {pass, fmt("slope %.3f (want -0.5 +- 0.1); %s", slope, detail.c_str())};
}

Outcome c6_residue_dominance() {
  std::string detail;
  bool pass = true;
  for (double temperature : {1e-5, 1e-4, 1e-3}) {
    const MomentEstimate est = scan_run(temperature);
    const Dominant dom = dominant_atom(est.moments, 4);
    if (dom.fraction < 0.95) pass = false;
    detail += fmt("T=%g: fraction %.4f  ", temperature, dom.fraction);
  }
  return {pass, detail + "(threshold 0.95)"};
}

Outcome c7_gap_contrast() {
  const MomentEstimate est = scan_run(1e-5);
  const double b = calibrate_scale(est.moments);
  const MomentSequence ref = sech_moments(b, 8);
  std::string detail = fmt("scale b=%.4g  ", b);
  bool pass = true;
  for (int n : {3, 4}) {
    const SpectralApproximant chain = quadrature_from_moments(est.moments, n);
    const SpectralApproximant smooth = quadrature_from_moments(ref, n);
    const double gap_chain = chain.atoms[1].omega - chain.atoms[0].omega;
    const double gap_smooth = smooth.atoms[1].omega - smooth.atoms[0].omega;
    const double ratio = gap_chain / gap_smooth;
    if (!(ratio > 3.0)) pass = false;
    detail += fmt("order %d: gap ratio %.2f  ", n, ratio);
  }
  return {pass, detail + "(want > 3)"};
}

// One ensemble sandwich run: estimate moments and the empirical correlation
// from the same sample, then check the alternating truncations bracket it.
Outcome sandwich_case(const FpuParams& params, std::uint64_t seed,
                      std::size_t n_points, std::size_t members,
                      const std::function<Observable(const ChainModel&, const SampleSet&)>& make_f,
                      double t_cap, std::string* detail) {
  const ChainModel model(params);
  const SampleSet sample = draw_sample(model, seed, n_points);
  const Observable f = make_f(model, sample);
  const MomentEstimate est = estimate_moments(model, sample, f, 8);

  const double dt = default_timestep(model);
  const double t_scale = std::sqrt(est.moments.c[0] / est.moments.c[1]);
  const double t_max = std::min(2.0 * t_scale, t_cap);
  const int n_times = 20;
  const long stride = std::max(1L, std::lround(t_max / (n_times * dt)));
  std::vector<double> grid;
  for (int k = 0; k <= n_times; ++k) grid.push_back(k * stride * dt);

  const EmpiricalCorrelation corr =
      empirical_autocorrelation(model, sample, f, grid, dt, 20, 1, members);
  const TruncationBoundsReport rep =
      truncation_bounds_check(corr, est.moments, {3, 4}, 3.0);

  *detail = fmt("t* = %.3g of %.3g (worst excess %.2f sigma)", rep.t_star,
                grid.back(), rep.worst_violation_sigma);
  return {rep.holds_anywhere && rep.t_star >= 0.5 * grid.back(), *detail};
}

Outcome c8_truncation_sandwich() {
  std::string d1, d2;
  const Outcome harmonic = sandwich_case(
      chain_params(8, 0.0, 0.0, 0.5), 21, 8000, 4000,
      [](const ChainModel&, const SampleSet&) { return Observable::position(0); },
      1e9, &d1);
  const Outcome fpu = sandwich_case(chain_params(16, 0.25, 0.25, 1e-3), 22, 20000,
                                    800, projected_low_mode, 40.0, &d2);
  return {harmonic.pass && fpu.pass,
          "harmonic: " + d1 + "; chain T=1e-3: " + d2};
}

Outcome c9_correlated_variables() {
  const ChainModel model(chain_params(8, 0.0, 0.0, 0.5));
  const SampleSet sample = draw_sample(model, 23, 4000);
  const double dt = default_timestep(model);
  std::vector<double> grid;
  for (int k = 0; k <= 4; ++k) grid.push_back(k * 400.0 * dt);

  MonomialTerm q0sq;
  q0sq.coeff = 1.0;
  q0sq.q_pows = {{0, 2}};
  MonomialTerm p3sq;
  p3sq.coeff = 0.1;
  p3sq.p_pows = {{3, 2}};
  const Observable f = Observable::custom({q0sq});
  const Observable g = Observable::custom({q0sq, p3sq});

  const CorrelatedVariablesReport rep =
      correlated_variables_check(model, sample, f, g, grid, dt);
  if (rep.skipped) return {false, fmt("pair skipped, corr = %.3f", rep.corr)};
  if (!rep.holds) {
    return {false, fmt("bound violated, worst margin %.3g", rep.worst_margin)};
  }

  // An uncorrelated pair must be declared out of reach, not force-checked.
  const CorrelatedVariablesReport indep = correlated_variables_check(
      model, sample, Observable::position(0), Observable::momentum(1),
      {0.0, 400.0 * dt}, dt, 4.0, 20, 1, 1000);
  if (!indep.skipped) return {false, fmt("independent pair not skipped, corr = %.3f",
                                         indep.corr)};
  return {true, fmt("corr %.4f, eps %.3f, worst margin %.3g; independent pair skipped",
                    rep.corr, rep.eps, rep.worst_margin)};
}

Outcome c10_criteria_signatures() {
  // One atom at omega = 1: constant moment sequence.
  MomentSequence atom;
  atom.c.assign(9, 0.8);
  atom.stderr_c.assign(9, 0.0);
  atom.n_samples = 1;
  atom.observable = "atom";
  atom.source = "analytic";
  const SpectralApproximant one = quadrature_from_moments(atom, 1);
  const CriteriaSummary a = run_criteria(atom, one);
  if (a.signature != "atomic-signature" || a.bounded_density.passes_some_L ||
      a.difference.verdict != "growth-indication" || !a.root.bounded) {
    return {false, fmt("atom fixture: signature %s, density %d, difference %s, root %d",
                       a.signature.c_str(), int(a.bounded_density.passes_some_L),
                       a.difference.verdict.c_str(), int(a.root.bounded))};
  }

  // Smooth half: the difference table runs on the exactly known compactified
  // moments of the sech measure; an atomic stand-in reads as growth at every
  // depth because its topmost node sits next to w = 1.
  const MomentSequence smooth = sech_moments(1.0, 10);
  const SpectralApproximant five = quadrature_from_moments(smooth, 5);
  CriteriaOptions opt;
  opt.exact_compact = sech_compact_moments(1.0, 24);
  const CriteriaSummary s = run_criteria(smooth, five, opt);
  if (s.signature != "smooth-signature" || !s.bounded_density.passes_some_L ||
      s.difference.verdict != "bounded-indication" || s.root.bounded) {
    return {false, fmt("smooth fixture: signature %s, density %d, difference %s, root %d",
                       s.signature.c_str(), int(s.bounded_density.passes_some_L),
                       s.difference.verdict.c_str(), int(s.root.bounded))};
  }
  return {true, "atom fixture atomic-signature, sech fixture smooth-signature"};
}

Outcome c11_determinant_gate() {
#ifndef ACSM_CLI_PATH
  return {false, "command line tool not built"};
#else
  // A two-atom sequence with c_2 corrupted: the order-2 orthogonal polynomial
  // sees a negative norm, so the quadrature must refuse order 2 by name.
  MomentEstimate est;
  est.moments = atoms_to_moments({{1.0, 0.7}, {2.0, 0.3}}, 3);
  est.moments.c[2] = 0.4;  // below c_1^2/c_0, impossible for any measure
  est.moments.observable = "corrupted";
  const fs::path dir = cache_dir() / "gate";
  fs::create_directories(dir);
  const fs::path mpath = dir / "corrupt_moments.json";
  write_moment_file(mpath.string(), est, "deadbeefdeadbeef");

  const fs::path errfile = dir / "stderr.txt";
  const std::string cmd = std::string(ACSM_CLI_PATH) + " poles --moments " +
                          mpath.string() + " --out " + dir.string() +
                          " --order 2 > /dev/null 2> " + errfile.string();
  const int rc = std::system(cmd.c_str());
  if (rc == -1 || !WIFEXITED(rc)) return {false, "tool did not run"};
  const int code = WEXITSTATUS(rc);

  std::ifstream in(errfile);
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string err = ss.str();
  if (code != 3) return {false, fmt("exit code %d, want 3; stderr: %s", code, err.c_str())};
  if (err.find("order 2") == std::string::npos) {
    return {false, "stderr does not name the failing order: " + err};
  }
  return {true, "exit code 3, failing order named in the diagnostic"};
#endif
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else if (std::strcmp(argv[i], "--help") == 0) {
      std::printf("usage: acceptance [--only N]\n");
      return 0;
    } else {
      std::fprintf(stderr, "unknown argument %s\n", argv[i]);
      return 64;
    }
  }

  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "harmonic-exactness", c1_harmonic_exactness},
      {2, "two-atom-recovery", c2_two_atom_recovery},
      {3, "tuple-enumeration", c3_tuple_enumeration},
      {4, "sech-fixture", c4_sech_fixture},
      {5, "frequency-scaling", c5_frequency_scaling},
      {6, "residue-dominance", c6_residue_dominance},
      {7, "gap-contrast", c7_gap_contrast},
      {8, "truncation-sandwich", c8_truncation_sandwich},
      {9, "correlated-variables", c9_correlated_variables},
      {10, "criteria-signatures", c10_criteria_signatures},
      {11, "determinant-gate", c11_determinant_gate},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    if (only != 0 && c.id != only) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("[%s] C%-2d %-21s %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name,
                o.detail.c_str());
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  }
  return failures;
}
