#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "acsm/dynamics.hpp"
#include "acsm/lie_derivatives.hpp"
#include "doctest.h"

using namespace acsm;

namespace {

FpuParams make_params(int n, double alpha, double beta) {
  FpuParams p;
  p.n_particles = n;
  p.alpha = alpha;
  p.beta = beta;
  p.temperature = 1.0;
  return p;
}

PhasePoint random_point(int n, unsigned seed, double scale = 0.4) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  PhasePoint x;
  x.q.resize(n);
  x.p.resize(n);
  for (int i = 0; i < n; ++i) {
    x.q[i] = u(gen);
    x.p[i] = u(gen);
  }
  return x;
}

// Brute-force enumeration of tuples (k_1..k_n) with sum j*k_j = s.
void enumerate_tuples(int n, long s, std::vector<std::vector<std::int64_t>>& out,
                      std::vector<std::int64_t>& cur, int j) {
  if (j == n) {
    long used = 0;
    for (int i = 0; i < n; ++i) used += (i + 1) * cur[i];
    if (used == s) out.push_back(cur);
    return;
  }
  long used = 0;
  for (int i = 0; i < j; ++i) used += (i + 1) * cur[i];
  for (long k = 0; (j + 1) * k <= s - used; ++k) {
    cur[j] = k;
    enumerate_tuples(n, s, out, cur, j + 1);
  }
  cur[j] = 0;
}

}  // namespace

TEST_CASE("jet products are truncated cauchy products") {
  Jet a(4), b(4);
  for (int m = 0; m <= 4; ++m) {
    a[m] = m + 1.0;       // 1 + 2t + 3t^2 + ...
    b[m] = 1.0 / (m + 1);  // 1 + t/2 + t^3/3 + ...
  }
  const Jet c = jet_mul(a, b);
  for (int m = 0; m <= 4; ++m) {
    double expect = 0.0;
    for (int i = 0; i <= m; ++i) expect += a[i] * b[m - i];
    CHECK(c[m] == doctest::Approx(expect).epsilon(1e-15));
  }

  Jet short_jet(2);
  CHECK_THROWS_AS(a += short_jet, std::invalid_argument);
}

TEST_CASE("harmonic single site derivatives are exact rotations") {
  const auto params = make_params(1, 0.0, 0.0);
  ChainModel model(params);
  PhasePoint x;
  x.q = {0.3};
  x.p = {-0.2};

  const auto d = lie_derivatives(model, x, Observable::position(0), 9);
  REQUIRE(d.size() == 10);
  // omega = 1: q^(2m) = (-1)^m q, q^(2m+1) = (-1)^m p.
  for (int n = 0; n <= 9; ++n) {
    const double expect = (n % 2 == 0 ? x.q[0] : x.p[0]) * ((n / 2) % 2 ? -1.0 : 1.0);
    CHECK(d[n] == doctest::Approx(expect).epsilon(1e-13));
  }
}

TEST_CASE("derivative lists satisfy the poisson bracket recursion") {
  // f^(n+1) = sum_i [ d f^(n)/dq_i * p_i + d f^(n)/dp_i * F_i ], with the
  // phase-space gradient taken by central differences of the jet outputs.
  const auto params = make_params(4, 0.25, 0.25);
  ChainModel model(params);
  const PhasePoint x = random_point(4, 21);
  const Observable f = Observable::low_mode_energy();

  const auto d = lie_derivatives(model, x, f, 5);
  const double h = 1e-5;
  std::vector<double> force;
  model.forces(x.q, force);

  for (int n = 0; n + 1 <= 5; ++n) {
    double bracket = 0.0;
    for (int i = 0; i < 4; ++i) {
      PhasePoint xp = x, xm = x;
      xp.q[i] += h;
      xm.q[i] -= h;
      const double dfdq = (lie_derivatives(model, xp, f, n)[n] -
                           lie_derivatives(model, xm, f, n)[n]) /
                          (2.0 * h);
      xp = x;
      xm = x;
      xp.p[i] += h;
      xm.p[i] -= h;
      const double dfdp = (lie_derivatives(model, xp, f, n)[n] -
                           lie_derivatives(model, xm, f, n)[n]) /
                          (2.0 * h);
      bracket += dfdq * x.p[i] + dfdp * force[i];
    }
    CHECK(std::abs(d[n + 1] - bracket) <
          1e-5 * std::max(1.0, std::abs(d[n + 1])));
  }
}

TEST_CASE("the energy is in the kernel of the derivative") {
  const auto params = make_params(6, 0.25, 0.25);
  ChainModel model(params);
  const PhasePoint x = random_point(6, 4);

  const auto d = lie_derivatives(model, x, Observable::total_energy(), 8);
  const double scale = std::abs(d[0]);
  double fact = 1.0;
  for (int n = 1; n <= 8; ++n) {
    fact *= n;
    CHECK(std::abs(d[n]) < 1e-11 * scale * fact);
  }
}

TEST_CASE("trajectory jets sum to the integrated flow") {
  const auto params = make_params(3, 0.25, 0.25);
  ChainModel model(params);
  const PhasePoint x = random_point(3, 9);

  const TrajectoryJets jets = trajectory_jet(model, x, 12);
  const double t = 0.2;
  const Trajectory traj = integrate(model, x, 1e-4, 2000);

  for (int j = 0; j < 3; ++j) {
    double qt = 0.0, pt = 0.0, tm = 1.0;
    for (int m = 0; m <= 12; ++m) {
      qt += jets.q[j][m] * tm;
      pt += jets.p[j][m] * tm;
      tm *= t;
    }
    CHECK(qt == doctest::Approx(traj.final_state.q[j]).epsilon(1e-6));
    CHECK(pt == doctest::Approx(traj.final_state.p[j]).epsilon(1e-6));
  }
}

TEST_CASE("custom monomial jets multiply coordinate jets") {
  const auto params = make_params(3, 0.25, 0.25);
  ChainModel model(params);
  const PhasePoint x = random_point(3, 33);

  MonomialTerm term;
  term.coeff = 2.5;
  term.q_pows = {{0, 2}};
  term.p_pows = {{1, 1}};
  const Observable f = Observable::custom({term});

  const Jet jf = observable_jet(model, x, f, 6);
  const TrajectoryJets jets = trajectory_jet(model, x, 6);
  Jet expect = jet_mul(jet_mul(jets.q[0], jets.q[0]), jets.p[1]);
  expect.scale(2.5);
  for (int m = 0; m <= 6; ++m) {
    CHECK(std::abs(jf[m] - expect[m]) < 1e-13 * std::max(1.0, std::abs(expect[m])));
  }

  CHECK(f.evaluate(model, x) == doctest::Approx(2.5 * x.q[0] * x.q[0] * x.p[1]));
}

TEST_CASE("order cap is enforced") {
  const auto params = make_params(2, 0.25, 0.25);
  ChainModel model(params);
  const PhasePoint x = random_point(2, 1);
  CHECK_THROWS_AS(trajectory_jet(model, x, kJetOrderCap + 1), std::invalid_argument);
  CHECK_THROWS_AS(lie_derivatives(model, x, Observable::position(0), 30),
                  std::invalid_argument);
}

TEST_CASE("tuple enumerator emits the documented order for weight 5") {
  DerivativePartition t = first_partition(3, 5);
  std::vector<std::vector<std::int64_t>> seen;
  do {
    seen.push_back(t.k);
  } while (next_partition(t));

  const std::vector<std::vector<std::int64_t>> expect = {
      {0, 1, 1}, {2, 0, 1}, {1, 2, 0}, {3, 1, 0}, {5, 0, 0}};
  CHECK(seen == expect);
}

TEST_CASE("tuple counts match brute force enumeration") {
  for (int n = 1; n <= 12; ++n) {
    for (long s = n; s <= 12; ++s) {
      std::vector<std::vector<std::int64_t>> ref;
      std::vector<std::int64_t> cur(n, 0);
      enumerate_tuples(n, s, ref, cur, 0);

      DerivativePartition t = first_partition(n, s);
      std::size_t count = 0;
      std::vector<std::int64_t> last;
      do {
        ++count;
        // every tuple satisfies the mass invariant
        long mass = 0;
        for (int j = 0; j < n; ++j) mass += (j + 1) * t.k[j];
        REQUIRE(mass == s);
        last = t.k;
      } while (next_partition(t));
      CHECK(count == ref.size());
      // the run ends at the all-ones tuple (s, 0, ..., 0)
      CHECK(last[0] == s);
    }
  }
  // partitions of 12 into parts of size <= 12
  std::vector<std::vector<std::int64_t>> ref;
  std::vector<std::int64_t> cur(12, 0);
  enumerate_tuples(12, 12, ref, cur, 0);
  CHECK(ref.size() == 77);
}

TEST_CASE("derivative composition matches jet composition") {
  // Compose F(G(t)) as formal series two ways: compose_derivatives per order
  // versus explicit polynomial evaluation of F on the G jet.
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> u(-0.8, 0.8);
  const int n_max = 8;

  std::vector<double> g_derivs(n_max);  // g^(1)..g^(n), value irrelevant
  for (auto& v : g_derivs) v = u(gen);
  std::vector<double> f_derivs(n_max + 1);  // f(g0), f'(g0), ...
  for (auto& v : f_derivs) v = u(gen);

  // G(t) - g0 as a jet with zero constant term.
  Jet dg(n_max);
  double fact = 1.0;
  for (int j = 1; j <= n_max; ++j) {
    fact *= j;
    dg[j] = g_derivs[j - 1] / fact;
  }
  // F(g0 + s) = sum_k f^(k) s^k / k! evaluated on s = dg by Horner.
  Jet comp = Jet::constant(0.0, n_max);
  double kfact = 1.0;
  for (int k = n_max; k >= 1; --k) kfact *= k;
  for (int k = n_max; k >= 0; --k) {
    comp = jet_mul(comp, dg);
    comp[0] += f_derivs[k] / kfact;
    kfact = k > 0 ? kfact / k : 1.0;
  }

  fact = 1.0;
  for (int n = 1; n <= n_max; ++n) {
    fact *= n;
    const double direct = compose_derivatives(
        std::span<const double>(f_derivs), std::span<const double>(g_derivs), n);
    CHECK(std::abs(direct - comp[n] * fact) <
          1e-11 * std::max(1.0, std::abs(direct)));
  }
}

TEST_CASE("composition handles the classic exponential identity") {
  // With f = exp and g^(j) = 1 for all j, the n-th derivative of f(g) at a
  // point where exp(g) = 1 is the n-th Bell number.
  std::vector<double> f_derivs(13, 1.0);
  std::vector<double> g_derivs(12, 1.0);
  const double bell[] = {1, 1, 2, 5, 15, 52, 203, 877, 4140, 21147, 115975, 678570, 4213597};
  for (int n = 1; n <= 12; ++n) {
    CHECK(compose_derivatives(std::span<const double>(f_derivs),
                              std::span<const double>(g_derivs), n) ==
          doctest::Approx(bell[n]).epsilon(1e-12));
  }
}
