#include "acsm/criteria.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "acsm/parallel.hpp"
#include "hausdorff_table.hpp"
#include "mp_support.hpp"

namespace acsm {
namespace {

using mp::Rat;
using mp::Real;

Rat rat_pow(const Rat& x, int n) {
  Rat r(1);
  for (int i = 0; i < n; ++i) r *= x;
  return r;
}

}  // namespace

// --- bounded-density sequence test -----------------------------------------

BoundedDensityResult bounded_density_check(const MomentSequence& m, double L,
                                           int k_max) {
  if (!(L > 0.0) || !std::isfinite(L)) {
    throw std::invalid_argument("L must be positive and finite");
  }
  const int avail = 2 * m.max_order();
  if (k_max < 0 || k_max > avail) k_max = avail;
  if (k_max < 0) throw std::invalid_argument("no moments available");

  // Symmetrized moments: even entries are the c_n, odd entries vanish.
  auto cp = [&m](int k) { return (k % 2) ? Rat(0) : Rat(m.c[k / 2]); };
  const Rat lrat(L);

  BoundedDensityResult res;
  res.L = L;
  std::vector<Rat> t(k_max + 1);
  for (int k = 0; k <= k_max; ++k) {
    const int s = k + 1;
    std::vector<std::vector<Rat>> a(s, std::vector<Rat>(s, Rat(0)));
    for (int i = 0; i < s; ++i) {
      for (int j = 0; j <= i; ++j) a[i][j] = Rat(i - j + 1) * cp(i - j);
      if (i + 1 < s) a[i][i + 1] = -Rat(i + 1) * lrat;
    }
    t[k] = mp::exact_det(std::move(a)) /
           (Rat(mp::factorial_int(k + 1)) * rat_pow(lrat, k + 1));
    res.t.push_back(t[k].convert_to<double>());
  }

  const int q = k_max / 2;
  for (int n = 0; n <= q; ++n) {
    std::vector<std::vector<Rat>> a(n + 1, std::vector<Rat>(n + 1));
    for (int i = 0; i <= n; ++i) {
      for (int j = 0; j <= n; ++j) a[i][j] = t[i + j];
    }
    const Rat d = mp::exact_det(std::move(a));
    res.minors.push_back(d.convert_to<double>());
    res.minor_signs.push_back(mp::sign_of(d));
    if (res.minor_signs.back() < 0) {
      res.fails_at = n;
      break;
    }
    if (res.minor_signs.back() == 0) {
      // A singular leading minor leaves definiteness undecided by minors
      // alone; report and stop rather than guess.
      res.degenerate = true;
      break;
    }
  }
  res.passes = !res.fails_at && !res.degenerate &&
               static_cast<int>(res.minors.size()) == q + 1;
  return res;
}

BoundedDensityReport bounded_density_scan(const MomentSequence& m,
                                          const std::vector<double>& L_grid,
                                          int k_max) {
  BoundedDensityReport rep;
  for (double L : L_grid) {
    rep.by_L.push_back(bounded_density_check(m, L, k_max));
    rep.passes_some_L = rep.passes_some_L || rep.by_L.back().passes;
  }
  return rep;
}

// --- compactified moments ---------------------------------------------------

CompactMoments hausdorff_moments(const SpectralApproximant& a, int k_max) {
  if (k_max < 0) throw std::invalid_argument("k_max must be >= 0");
  for (const SpectralAtom& atom : a.atoms) {
    if (!std::isfinite(atom.omega)) {
      throw std::invalid_argument("atom frequency must be finite");
    }
  }
  CompactMoments cm;
  cm.mu.resize(k_max + 1);
  cm.mu_tilde.resize(k_max + 1);
  std::vector<double> w(a.atoms.size()), sw(a.atoms.size()),
      pw(a.atoms.size(), 1.0);
  for (std::size_t i = 0; i < a.atoms.size(); ++i) {
    const double u = a.atoms[i].omega * a.atoms[i].omega;
    w[i] = u / (1.0 + u);
    sw[i] = std::sqrt(w[i]);
  }
  for (int k = 0; k <= k_max; ++k) {
    Accumulator mu, mt;
    for (std::size_t i = 0; i < a.atoms.size(); ++i) {
      mu.add(a.atoms[i].rho * pw[i]);
      mt.add(a.atoms[i].rho * pw[i] * sw[i]);
      }
    cm.mu[k] = mu.value();
    cm.mu_tilde[k] = mt.value();
    for (std::size_t i = 0; i < a.atoms.size(); ++i) pw[i] *= w[i];
  }
  return cm;
}

CompactMoments sech_compact_moments(double b, int k_max) {
  if (!(b > 0.0) || !std::isfinite(b)) {
    throw std::invalid_argument("b must be positive and finite");
  }
  if (k_max < 0) throw std::invalid_argument("k_max must be >= 0");
  mp::set_precision_bits(320);
  const Real pi = 4 * atan(Real(1));

  // Gauss-Legendre nodes and weights on [-1, 1] by Newton on P_n.
  const int gl = 48;
  std::vector<Real> node(gl), weight(gl);
  for (int i = 0; i < gl; ++i) {
    Real x(std::cos(M_PI * (i + 0.75) / (gl + 0.5)));
    Real dp(0);
    for (int it = 0; it < 12; ++it) {
      Real p0(1), p1 = x;
      for (int j = 2; j <= gl; ++j) {
        const Real p2 = ((2 * j - 1) * x * p1 - (j - 1) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      dp = gl * (x * p1 - p0) / (x * x - 1);
      x -= p1 / dp;
    }
    node[i] = x;
    weight[i] = 2 / ((1 - x * x) * dp * dp);
  }

  // The integrand sech(pi omega / (2b)) / b times w^(k[+1/2]) is analytic on
  // the real axis with nearest singularities at omega = i b (cosh zero) and
  // omega = i (branch of sqrt(1 + omega^2)); panels no wider than either keep
  // the per-panel Gauss error far below double rounding. sech <= 2 e^(-pi
  // omega / (2b)) makes the tail beyond 80 b irrelevant.
  const Real bb(b);
  const Real h = min(Real(2) * bb, Real(1));
  const int panels = static_cast<int>(std::ceil(80.0 * b / std::min(2.0 * b, 1.0)));
  CompactMoments cm;
  cm.mu.assign(k_max + 1, 0.0);
  cm.mu_tilde.assign(k_max + 1, 0.0);
  std::vector<Real> mu(k_max + 1, Real(0)), mt(k_max + 1, Real(0));
  for (int pnl = 0; pnl < panels; ++pnl) {
    const Real a0 = pnl * h;
    for (int i = 0; i < gl; ++i) {
      const Real om = a0 + h / 2 * (node[i] + 1);
      const Real sc = weight[i] * h / 2 / (bb * cosh(pi * om / (2 * bb)));
      const Real w = om * om / (1 + om * om);
      const Real sw = sqrt(w);
      Real pw(1);
      for (int k = 0; k <= k_max; ++k) {
        mu[k] += sc * pw;
        mt[k] += sc * pw * sw;
        pw *= w;
      }
    }
  }
  for (int k = 0; k <= k_max; ++k) {
    cm.mu[k] = mu[k].convert_to<double>();
    cm.mu_tilde[k] = mt[k].convert_to<double>();
  }
  return cm;
}

double hausdorff_mu_tilde_series(const std::function<double(int)>& mu, int k,
                                 double rel_tol, int max_terms) {
  if (k < 0) throw std::invalid_argument("k must be >= 0");
  mp::set_precision_bits(512);
  // mu~_k = 2^{-k-1/2} sum_n C(k+1/2, n) sum_l C(n,l) 2^l (-1)^{n-l} mu_l.
  //
  // The inner alternating sum cancels almost completely: for mu_l ~ w^l its
  // true value decays like (2w-1)^n while the unsigned mass grows like
  // (1+2w)^n. Any relative error in mu_l is therefore amplified by
  // ((1+2w)/(2w-1))^n, and since mu returns doubles the contributions bottom
  // out near 1e-16 * (1+2w)^n and then grow without bound, regardless of the
  // working precision used here. Track the running minimum of |contrib| and,
  // once the terms have clearly turned around, return the partial sum taken
  // at that minimum; it is the best value the input precision supports.
  // Inputs whose terms never became small against the sum get the throw.
  Real sum(0);
  Real bin(1);  // C(k+1/2, n)
  int small_streak = 0;
  Real best_contrib(0);
  Real best_sum(0);
  bool have_best = false;
  for (int n = 0; n < max_terms; ++n) {
    Real inner(0);
    Real bnl(1);  // C(n, l)
    Real two_l(1);
    for (int l = 0; l <= n; ++l) {
      const Real term = bnl * two_l * Real(mu(l));
      ((n - l) % 2 ? inner -= term : inner += term);
      bnl = bnl * Real(n - l) / Real(l + 1);
      two_l *= 2;
    }
    const Real contrib = bin * inner;
    sum += contrib;
    if (n >= k + 2) {
      const Real cabs = abs(contrib);
      if (cabs <= Real(rel_tol) * (abs(sum) + Real(1e-300))) {
        if (++small_streak >= 5) break;
      } else {
        small_streak = 0;
      }
      if (!have_best || cabs < best_contrib) {
        best_contrib = cabs;
        best_sum = sum;
        have_best = true;
      } else if (n >= k + 10 && cabs > Real(1e6) * (best_contrib + Real(1e-300))) {
        if (best_contrib <= Real(1e-6) * (abs(best_sum) + Real(1e-300))) {
          sum = best_sum;
          break;
        }
        throw std::runtime_error("binomial series for mu~ did not converge");
      }
    }
    bin = bin * (Real(k) + Real(0.5) - Real(n)) / Real(n + 1);
    if (n + 1 == max_terms) {
      throw std::runtime_error("binomial series for mu~ did not converge");
    }
  }
  const Real scale = pow(Real(2), -k) / sqrt(Real(2));
  return Real(scale * sum).convert_to<double>();
}

// --- finite-difference criterion --------------------------------------------

namespace {

DifferenceCriterionReport report_from_tables(
    const detail::HausdorffTables<Real>& tables, int p_max, int k_levels) {
  DifferenceCriterionReport rep;
  rep.p_max = p_max;
  rep.sup_by_p.assign(k_levels, std::vector<double>(p_max + 1, 0.0));

  for (int k = 0; k < k_levels; ++k) {
    DifferenceCriterionLevel level;
    level.k = k;
    const int p_lo = std::max(2 * k + 1, p_max / 2);
    bool indeterminate = false;
    std::vector<double> lx, ly;
    for (int p = 0; p <= p_max; ++p) {
      const double v = tables.sup_val[k][p].convert_to<double>();
      const double e = tables.sup_err[k][p].convert_to<double>();
      rep.sup_by_p[k][p] = v;
      if (p < 2 * k) continue;
      if (e > v) {
        if (p >= p_lo) indeterminate = true;
        continue;
      }
      level.sup_value = std::max(level.sup_value, v);
      if (p >= p_lo && v > 0.0) {
        lx.push_back(std::log(static_cast<double>(p)));
        ly.push_back(std::log(v));
      }
    }
    if (indeterminate || lx.size() < 2) {
      level.verdict = "indeterminate";
    } else {
      double sx = 0, sy = 0, sxx = 0, sxy = 0;
      const double n = static_cast<double>(lx.size());
      for (std::size_t i = 0; i < lx.size(); ++i) {
        sx += lx[i];
        sy += ly[i];
        sxx += lx[i] * lx[i];
        sxy += lx[i] * ly[i];
      }
      level.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
      level.verdict = level.slope >= 0.25 ? "growth-indication" : "bounded-indication";
    }
    rep.levels.push_back(level);
  }

  // The report answers the bounded-density question, which is level 0; the
  // higher levels are per-derivative diagnostics and do not veto it.
  rep.verdict = rep.levels.empty() ? "indeterminate" : rep.levels[0].verdict;
  return rep;
}

}  // namespace

DifferenceCriterionReport hausdorff_difference_report(const CompactMoments& cm,
                                                      int p_max, int k_levels) {
  if (cm.mu_tilde.size() < static_cast<std::size_t>(p_max) + 1) {
    throw std::invalid_argument("mu~ must reach order p_max");
  }
  mp::set_precision_bits(512);
  std::vector<Real> mt(p_max + 1), err(p_max + 1);
  for (int i = 0; i <= p_max; ++i) {
    mt[i] = Real(cm.mu_tilde[i]);
    // Inputs went through a double; half an ulp each is all we may assume.
    err[i] = abs(mt[i]) * ldexp(Real(1), -53);
  }
  const auto tables = detail::hausdorff_lambda_tables(mt, err, p_max, k_levels);
  return report_from_tables(tables, p_max, k_levels);
}

DifferenceCriterionReport hausdorff_difference_report(
    const SpectralApproximant& a, int p_max, int k_levels) {
  mp::set_precision_bits(512);
  std::vector<Real> mt(p_max + 1), err(p_max + 1);
  std::vector<Real> w(a.atoms.size()), sw(a.atoms.size()), pw(a.atoms.size(), Real(1));
  for (std::size_t i = 0; i < a.atoms.size(); ++i) {
    const Real u = Real(a.atoms[i].omega) * Real(a.atoms[i].omega);
    w[i] = u / (1 + u);
    sw[i] = sqrt(w[i]);
  }
  for (int k = 0; k <= p_max; ++k) {
    Real s(0), sa(0);
    for (std::size_t i = 0; i < a.atoms.size(); ++i) {
      const Real term = Real(a.atoms[i].rho) * pw[i] * sw[i];
      s += term;
      sa += abs(term);
      pw[i] *= w[i];
    }
    mt[k] = s;
    // Working-precision rounding only; far below any double-input ulp.
    err[k] = sa * Real("1e-130");
  }
  const auto tables = detail::hausdorff_lambda_tables(mt, err, p_max, k_levels);
  return report_from_tables(tables, p_max, k_levels);
}

// --- root growth test --------------------------------------------------------

RootTestReport root_test(const MomentSequence& m, double threshold,
                         double slack) {
  RootTestReport rep;
  rep.threshold = threshold;
  const int nmax = m.max_order();
  for (int n = 1; n <= nmax; ++n) {
    rep.r.push_back(m.c[n] > 0.0 ? std::exp(std::log(m.c[n]) / n) : 0.0);
  }
  if (rep.r.empty()) {
    rep.bounded = true;
    return rep;
  }
  const int lo = std::max(1, (nmax + 1) / 2);  // window over the last half
  rep.bounded = rep.r.back() <= threshold;
  for (int n = lo; n < nmax && rep.bounded; ++n) {
    if (rep.r[n] > rep.r[n - 1] * (1.0 + slack)) rep.bounded = false;
  }
  if (!rep.bounded) {
    Accumulator acc;
    int count = 0;
    for (int n = lo; n <= nmax; ++n) {
      if (m.c[n] > 0.0) {
        acc.add((std::log(m.c[n]) - std::lgamma(2.0 * n + 1.0)) / n);
        ++count;
      }
    }
    if (count > 0) rep.growth_scale = std::exp(acc.value() / count);
  }
  return rep;
}

// --- a-priori polynomial positivity ------------------------------------------

namespace {

using Poly = std::vector<Rat>;  // ascending powers

void trim(Poly& p) {
  while (!p.empty() && p.back() == 0) p.pop_back();
}

int sign_at(const Poly& p, const Rat& x) {
  Rat v(0);
  for (std::size_t i = p.size(); i-- > 0;) v = v * x + p[i];
  return mp::sign_of(v);
}

Poly derive(const Poly& p) {
  Poly d;
  for (std::size_t i = 1; i < p.size(); ++i) d.push_back(p[i] * Rat(static_cast<int>(i)));
  return d;
}

Poly neg_rem(Poly a, const Poly& b) {
  while (a.size() >= b.size() && !a.empty()) {
    const Rat f = a.back() / b.back();
    const std::size_t shift = a.size() - b.size();
    for (std::size_t i = 0; i + 1 < b.size(); ++i) a[shift + i] -= f * b[i];
    a.pop_back();
    trim(a);
  }
  for (Rat& c : a) c = -c;
  return a;
}

// Distinct real roots of p in (lo, hi] by Sturm's theorem. Neither endpoint
// may be a root of p.
int sturm_count(const Poly& p, const Rat& lo, const Rat& hi) {
  std::vector<Poly> chain{p, derive(p)};
  trim(chain[0]);
  trim(chain[1]);
  while (!chain.back().empty() && chain.back().size() > 1) {
    chain.push_back(neg_rem(chain[chain.size() - 2], chain.back()));
  }
  auto variations = [&chain](const Rat& x) {
    int var = 0, prev = 0;
    for (const Poly& q : chain) {
      if (q.empty()) continue;
      const int s = sign_at(q, x);
      if (s == 0) continue;
      if (prev != 0 && s != prev) ++var;
      prev = s;
    }
    return var;
  };
  return variations(lo) - variations(hi);
}

// Root-free upper bound: every real root of p is below 1 + max |a_i / a_top|.
Rat cauchy_bound(const Poly& p) {
  Rat maxr(0);
  for (std::size_t i = 0; i + 1 < p.size(); ++i) {
    Rat r = p[i] / p.back();
    if (r < 0) r = -r;
    if (r > maxr) maxr = r;
  }
  return maxr + 1;
}

}  // namespace

PolynomialPositivityReport apriori_positivity(const MomentSequence& m,
                                              int n_max, int l_max) {
  if (l_max < 0) throw std::invalid_argument("l_max must be >= 0");
  if (n_max < 0) {
    n_max = (m.max_order() - 1 - l_max) / 2;
  }
  PolynomialPositivityReport rep;
  rep.all_positive = true;
  if (n_max < 1) return rep;
  if (m.max_order() < 2 * n_max + l_max + 1) {
    throw std::invalid_argument("moments too short for requested (n_max, l_max)");
  }

  const bool have_se = m.stderr_c.size() == m.c.size();
  auto se = [&](int idx) { return have_se ? m.stderr_c[idx] : 0.0; };

  for (int l = 0; l <= l_max; ++l) {
    for (int n = 1; n <= n_max; ++n) {
      for (char family : {'P', 'Q'}) {
        // Signed coefficients in doubles for the numeric minimum estimate.
        const int deg = 2 * n;
        std::vector<double> coeff(deg + 1), dse(deg + 1);
        Poly poly(deg + 1);
        for (int k = 0; k <= deg; ++k) {
          // k-th coefficient is a_k (P) or a_{k+1} (Q) with a_j = c_{j+l}/(2j)!
          const int j = family == 'P' ? k : k + 1;
          const int idx = j + l;
          const double fact = std::exp(-std::lgamma(2.0 * j + 1.0));
          const double sign = (k % 2) ? -1.0 : 1.0;
          coeff[k] = sign * m.c[idx] * fact;
          dse[k] = se(idx) * fact;
          const Rat rfact = Rat(1) / Rat(mp::factorial_int(2 * j));
          poly[k] = (k % 2 ? -Rat(m.c[idx]) : Rat(m.c[idx])) * rfact;
        }
        if (family == 'P') {
          coeff[0] *= 2.0;
          dse[0] *= 2.0;
          poly[0] *= 2;
        }

        PolynomialPositivityEntry entry;
        entry.family = family;
        entry.n = n;
        entry.l = l;

        Poly probe = poly;
        trim(probe);
        if (probe.empty()) {
          entry.min_estimate = 0.0;
          entry.tolerance = 0.0;
          entry.positive = true;
          rep.entries.push_back(entry);
          continue;
        }

        // Numeric scan for the location and depth of the minimum.
        double bound = 1.0;
        for (int k = 0; k < deg; ++k) {
          if (coeff[deg] != 0.0) {
            bound = std::max(bound, 1.0 + std::abs(coeff[k] / coeff[deg]));
          }
        }
        auto eval = [&coeff, deg](double y) {
          double v = coeff[deg];
          for (int k = deg - 1; k >= 0; --k) v = v * y + coeff[k];
          return v;
        };
        double y_star = 0.0, min_v = eval(0.0);
        const int grid = 2000;
        for (int g = 0; g <= grid; ++g) {
          const double y = bound * std::exp((g - grid) * (28.0 / grid));
          const double v = eval(y);
          if (v < min_v) {
            min_v = v;
            y_star = y;
          }
        }
        entry.min_estimate = min_v;

        double tol = 0.0;
        {
          Accumulator acc;
          double ypow = 1.0;
          for (int k = 0; k <= deg; ++k) {
            acc.add(dse[k] * ypow);
            ypow *= y_star;
          }
          tol = 3.0 * acc.value();
        }
        entry.tolerance = tol;

        // Certified decision: the shifted polynomial has a positive real root
        // iff the original dips below -tol somewhere on y > 0. An exact
        // tangency counts as a failure, which is the conservative side.
        Poly shifted = probe;
        shifted[0] += Rat(tol);
        trim(shifted);
        if (shifted.empty()) {
          entry.positive = true;
        } else if (sign_at(shifted, Rat(0)) < 0) {
          entry.positive = false;
        } else if (shifted.size() == 1) {
          entry.positive = mp::sign_of(shifted[0]) >= 0;
        } else {
          entry.positive = sturm_count(shifted, Rat(0), cauchy_bound(shifted)) == 0;
        }

        if (!entry.positive && !rep.first_failure) {
          rep.first_failure = rep.entries.size();
        }
        rep.all_positive = rep.all_positive && entry.positive;
        rep.entries.push_back(entry);
      }
    }
  }
  return rep;
}

// --- composite ----------------------------------------------------------------

CriteriaSummary run_criteria(const MomentSequence& m,
                             const SpectralApproximant& atoms,
                             const CriteriaOptions& opt) {
  CriteriaSummary sum;

  std::vector<double> grid = opt.L_grid;
  if (grid.empty()) {
    if (m.c.size() < 2 || !(m.c[0] > 0.0) || !(m.c[1] > 0.0)) {
      throw std::invalid_argument("default L grid needs c_0, c_1 > 0");
    }
    const double scale = m.c[1] / m.c[0];
    for (int j = -6; j <= 6; ++j) grid.push_back(std::ldexp(scale, j));
  }
  sum.bounded_density = bounded_density_scan(m, grid, opt.k_max);
  sum.difference = opt.exact_compact
                       ? hausdorff_difference_report(*opt.exact_compact,
                                                     opt.p_max, opt.k_levels)
                       : hausdorff_difference_report(atoms, opt.p_max,
                                                     opt.k_levels);
  sum.root = root_test(m, opt.root_threshold);
  sum.positivity = apriori_positivity(m, opt.apriori_n_max, opt.apriori_l_max);

  const bool bd = sum.bounded_density.passes_some_L;
  const std::string& dv = sum.difference.verdict;
  if (!bd && dv == "growth-indication" && sum.root.bounded) {
    sum.signature = "atomic-signature";
  } else if (bd && dv == "bounded-indication" && !sum.root.bounded) {
    sum.signature = "smooth-signature";
  } else {
    sum.signature = "mixed-indication";
  }
  return sum;
}

}  // namespace acsm
