#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "acsm/stieltjes.hpp"

namespace acsm {

// Regularity indicators for the spectral measure behind a moment sequence.
// Each one probes a different property; together they separate "a few sharp
// lines" from "a smooth absolutely continuous density".

// --- bounded-density sequence test ---------------------------------------
//
// From the symmetrized moments c'_2n = c_n, c'_odd = 0 build
//   t_k(L) = det(M_k) / ((k+1)! L^(k+1)),
// M_k being the (k+1)x(k+1) band matrix with M[i][j] = (i-j+1) c'_{i-j} for
// j <= i and -i*L on the superdiagonal. A spectral density bounded by L/pi
// exists iff (t_k) is a nonnegative-definite sequence; we test the leading
// principal minors of [t_{i+j}] up to the available order, in exact rational
// arithmetic, so each reported sign is certified.
struct BoundedDensityResult {
  double L = 0.0;
  std::vector<double> t;            // t_0 .. t_kmax
  std::vector<double> minors;       // det [t_{i+j}], sizes 1..Q+1
  std::vector<int> minor_signs;     // certified -1, 0, +1
  std::optional<int> fails_at;      // first order with a negative minor
  bool degenerate = false;          // hit an exactly singular minor first
  bool passes = false;              // all minors positive up to Q
};

struct BoundedDensityReport {
  std::vector<BoundedDensityResult> by_L;
  bool passes_some_L = false;
};

BoundedDensityResult bounded_density_check(const MomentSequence& m, double L,
                                           int k_max);
BoundedDensityReport bounded_density_scan(const MomentSequence& m,
                                          const std::vector<double>& L_grid,
                                          int k_max);

// --- compactified moment problem ------------------------------------------
//
// The spectral measure in u = omega^2 is pushed to [0, 1] by w = u/(1+u).
// mu_k are the moments of the image, mu~_k the moments of sqrt(w) times it.
struct CompactMoments {
  std::vector<double> mu;
  std::vector<double> mu_tilde;
};

CompactMoments hausdorff_moments(const SpectralApproximant& a, int k_max);

// Exact compactified moments of the sech(b t) reference measure, i.e. of the
// spectral density sech(pi omega / (2 b)) / b on omega >= 0, by high-precision
// quadrature. Unlike a finite quadrature rule, whose topmost node plants an
// atom near w = 1 and poisons the edge columns of the difference table, these
// carry the smooth measure itself (to double rounding).
CompactMoments sech_compact_moments(double b, int k_max);

// Binomial-series route to mu~_k from the mu alone; independent cross-check
// of the closed form above. mu(l) must be valid for l = 0..max_terms.
double hausdorff_mu_tilde_series(const std::function<double(int)>& mu, int k,
                                 double rel_tol = 1e-30,
                                 int max_terms = 200000);

// Finite-difference boundedness test on mu~: smooth compact densities keep
//   (p+1) |lambda^k_{p,m}|,   lambda^0_{p,m} = C(p,m) sum_i (-1)^i C(p-m,i) mu~_{m+i},
//   lambda^k_{p,m} = (p+1)(lambda^{k-1}_{p,m} - lambda^{k-1}_{p,m-1}),
// bounded in p for each k, while atomic measures push it up like a power of p.
struct DifferenceCriterionLevel {
  int k = 0;
  double sup_value = 0.0;
  double slope = 0.0;  // fitted log-log growth of max_m (p+1)|lambda^k| in p
  // "bounded-indication" | "growth-indication" | "indeterminate" (the
  // propagated input uncertainty swamps the table values in the fit window).
  std::string verdict;
};

struct DifferenceCriterionReport {
  std::vector<DifferenceCriterionLevel> levels;
  std::vector<std::vector<double>> sup_by_p;  // [level][p]
  int p_max = 0;
  // Level-0 verdict: does a bounded density exist at all. Higher levels probe
  // higher derivatives and stand on their own; even genuinely differentiable
  // densities with steep shoulders keep level k >= 1 rising until p is far
  // beyond what double-rounded inputs support, so they do not veto level 0.
  std::string verdict;
};

// Tables run in arbitrary precision; the inputs are taken with an absolute
// uncertainty of one double ulp each, which the alternating sums amplify by
// roughly 3^p, so double-rounded mu~ support only moderate p.
DifferenceCriterionReport hausdorff_difference_report(const CompactMoments& cm,
                                                      int p_max, int k_levels);
// Same report built straight from the atoms: mu~ never passes through a
// double, so the usable p range is limited only by the working precision.
DifferenceCriterionReport hausdorff_difference_report(
    const SpectralApproximant& a, int p_max, int k_levels);

// --- root growth test ------------------------------------------------------
//
// r_n = c_n^(1/n). Convergent r_n indicates sub-exponential correlation
// decay; (2n)!-type growth is the smooth/exponential signature, with scale
// D recovered from c_n ~ D^n (2n)!.
struct RootTestReport {
  std::vector<double> r;  // index n-1 holds r_n
  bool bounded = false;   // non-increasing (within slack) over the last half
  double threshold = 0.0;
  double growth_scale = 0.0;  // fitted D
};

RootTestReport root_test(const MomentSequence& m,
                         double threshold = 1e300, double slack = 0.05);

// --- direct positivity of moment polynomials -------------------------------
//
// With a^l_k = c_{k+l}/(2k)!, the polynomials
//   P^l_n(y) = 2 a^l_0 + sum_{k=1..2n} (-1)^k a^l_k y^k
//   Q^l_n(y) = sum_{k=0..2n} (-1)^k a^l_{k+1} y^k
// must stay nonnegative on y >= 0 for any moment sequence of a positive
// measure. Verdicts are certified by Sturm root counting on the exact
// rational shifted polynomial; min_estimate is a numeric diagnostic only.
struct PolynomialPositivityEntry {
  char family = 'P';
  int n = 0;
  int l = 0;
  double min_estimate = 0.0;
  double tolerance = 0.0;
  bool positive = false;
};

struct PolynomialPositivityReport {
  std::vector<PolynomialPositivityEntry> entries;
  bool all_positive = false;
  std::optional<std::size_t> first_failure;  // index into entries
};

PolynomialPositivityReport apriori_positivity(const MomentSequence& m,
                                              int n_max, int l_max);

// --- composite -------------------------------------------------------------
struct CriteriaOptions {
  // Empty grid means the log scan {2^j * c_1/c_0 : j = -6..6}.
  std::vector<double> L_grid;
  int k_max = -1;     // default: use all available moments
  int p_max = 24;
  int k_levels = 2;
  int apriori_n_max = -1;
  int apriori_l_max = 1;
  double root_threshold = 1e300;
  // When the compactified moments of the underlying measure are known exactly
  // (reference measures), hand them in here and the difference criterion uses
  // them instead of the atomic approximant, whose own discreteness reads as
  // growth at every depth.
  std::optional<CompactMoments> exact_compact;
};

struct CriteriaSummary {
  BoundedDensityReport bounded_density;
  DifferenceCriterionReport difference;
  RootTestReport root;
  PolynomialPositivityReport positivity;
  // "atomic-signature": bounded density fails for every L, difference
  // criterion grows, root test bounded. "smooth-signature": the opposite.
  std::string signature;
};

CriteriaSummary run_criteria(const MomentSequence& m,
                             const SpectralApproximant& atoms,
                             const CriteriaOptions& opt = {});

}  // namespace acsm
