#include "acsm/stieltjes.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "acsm/parallel.hpp"
#include "mp_support.hpp"

namespace acsm {
namespace {

using mp::Rat;
using mp::Real;

// Recurrence coefficients of the orthogonal polynomials of the conditioned
// measure. Computed in exact rational arithmetic, so a positivity failure is
// a property of the input moments, never of rounding.
struct Recurrence {
  std::vector<Rat> alpha, beta;  // beta[0] = conditioned mass
  Rat lambda;                    // conditioning scale c_1/c_0
  std::vector<Rat> mhat;         // conditioned moments
};

Recurrence chebyshev_exact(const std::vector<double>& c, int order) {
  const int L = 2 * order;
  Recurrence rec;
  const Rat c0(c[0]);
  rec.lambda = Rat(c[1]) / c0;
  rec.mhat.resize(L);
  Rat scale(1);
  for (int k = 0; k < L; ++k) {
    rec.mhat[k] = Rat(c[k]) / (c0 * scale);
    scale *= rec.lambda;
  }

  std::vector<std::vector<Rat>> sigma(order, std::vector<Rat>(L + 1, Rat(0)));
  for (int l = 0; l < L; ++l) sigma[0][l] = rec.mhat[l];
  rec.alpha = {rec.mhat[1] / rec.mhat[0]};
  rec.beta = {rec.mhat[0]};
  for (int k = 1; k < order; ++k) {
    for (int l = k; l <= L - k - 1; ++l) {
      Rat s = sigma[k - 1][l + 1] - rec.alpha[k - 1] * sigma[k - 1][l];
      if (k >= 2) s -= rec.beta[k - 1] * sigma[k - 2][l];
      sigma[k][l] = s;
    }
    if (sigma[k][k] <= 0) {
      throw QuadratureError(
          "moment sequence admits at most " + std::to_string(k) +
              " spectral atoms; order " + std::to_string(k + 1) +
              " quadrature does not exist",
          k + 1, k);
    }
    rec.beta.push_back(sigma[k][k] / sigma[k - 1][k - 1]);
    rec.alpha.push_back(sigma[k][k + 1] / sigma[k][k] -
                        sigma[k - 1][k] / sigma[k - 1][k - 1]);
  }
  return rec;
}

struct AtomsHat {
  std::vector<Real> x, w;
};

// Gauss nodes/weights of the conditioned measure at the given working
// precision: Sturm-count bisection on the Jacobi matrix, then Christoffel
// weights from the orthonormal polynomial values.
AtomsHat jacobi_atoms(const Recurrence& rec, int bits) {
  const int n = static_cast<int>(rec.alpha.size());
  std::vector<Real> a(n), b2(n);
  for (int i = 0; i < n; ++i) {
    a[i] = Real(rec.alpha[i]);
    b2[i] = Real(rec.beta[i]);  // b2[i] is the squared offdiagonal for i >= 1
  }
  std::vector<Real> off(n, Real(0));
  for (int i = 1; i < n; ++i) off[i] = sqrt(b2[i]);

  Real lo = a[0], hi = a[0];
  for (int i = 0; i < n; ++i) {
    const Real r = off[i] + (i + 1 < n ? off[i + 1] : Real(0));
    lo = (std::min)(lo, Real(a[i] - r));
    hi = (std::max)(hi, Real(a[i] + r));
  }
  const Real pad = (abs(lo) + abs(hi) + 1) / 1024;
  lo -= pad;
  hi += pad;

  const Real tiny = ldexp(Real(1), -4 * bits);
  auto count_below = [&](const Real& x) {
    int cnt = 0;
    Real d(1);
    for (int i = 0; i < n; ++i) {
      Real di = a[i] - x;
      if (i > 0) di -= b2[i] / d;
      if (di == 0) di = -tiny;
      if (di < 0) ++cnt;
      d = di;
    }
    return cnt;
  };

  AtomsHat out;
  out.x.resize(n);
  out.w.resize(n);
  const int iters = bits + 24;
  for (int j = 0; j < n; ++j) {
    Real ax = lo, bx = hi;
    for (int it = 0; it < iters; ++it) {
      const Real mid = (ax + bx) / 2;
      (count_below(mid) <= j ? ax : bx) = mid;
    }
    out.x[j] = (ax + bx) / 2;
  }

  for (int j = 0; j < n; ++j) {
    // Monic recurrence p_{k+1} = (x - alpha_k) p_k - beta_k p_{k-1} with
    // ||p_k||^2 = beta_0 ... beta_k.
    Real pk(1), pkm1(0);
    Real prod_beta = Real(rec.beta[0]);
    Real s = pk * pk / prod_beta;
    for (int k = 0; k + 1 < n; ++k) {
      const Real pk1 = (out.x[j] - a[k]) * pk - b2[k] * pkm1;
      pkm1 = pk;
      pk = pk1;
      prod_beta *= b2[k + 1];
      s += pk * pk / prod_beta;
    }
    out.w[j] = 1 / s;
  }
  return out;
}

bool residuals_ok(const Recurrence& rec, const AtomsHat& atoms) {
  const int n = static_cast<int>(atoms.x.size());
  const Real tol("1e-20");
  for (std::size_t k = 0; k < rec.mhat.size(); ++k) {
    Real s(0);
    for (int j = 0; j < n; ++j) s += atoms.w[j] * pow(atoms.x[j], static_cast<unsigned>(k));
    const Real target = Real(rec.mhat[k]);
    Real denom = abs(target);
    if (denom == 0) denom = 1;
    if (abs(s - target) > tol * denom) return false;
  }
  return true;
}

}  // namespace

SpectralApproximant quadrature_from_moments(const MomentSequence& m, int order,
                                            int precision_bits) {
  if (order < 1) throw std::invalid_argument("quadrature order must be >= 1");
  if (m.c.size() < static_cast<std::size_t>(2 * order)) {
    throw std::invalid_argument("order n quadrature needs moments c_0..c_{2n-1}");
  }
  if (precision_bits < 64) throw std::invalid_argument("precision too low");
  for (int k = 0; k < 2 * order; ++k) {
    if (!std::isfinite(m.c[k])) {
      throw std::invalid_argument("moments must be finite");
    }
  }
  if (!(m.c[0] > 0.0)) {
    throw QuadratureError("zeroth moment must be positive", 1, 0);
  }
  if (!(m.c[1] > 0.0)) {
    throw QuadratureError("first moment must be positive", 1, 0);
  }

  const Recurrence rec = chebyshev_exact(m.c, order);

  for (int bits = precision_bits; bits <= 4096; bits *= 2) {
    mp::set_precision_bits(bits);
    const AtomsHat atoms = jacobi_atoms(rec, bits);

    // Nodes live on the positive half line; tolerate only rounding-level
    // excursions (the eigensolve is exact-input, so real failures are large).
    const Real neg_tol("-1e-25");
    for (const Real& x : atoms.x) {
      if (x < neg_tol) {
        throw QuadratureError(
            "order " + std::to_string(order) +
                " quadrature places a node at negative frequency squared",
            order, order - 1);
      }
    }

    if (!residuals_ok(rec, atoms) && bits * 2 <= 4096) continue;
    if (!residuals_ok(rec, atoms)) {
      throw QuadratureError("quadrature residuals did not stabilize at 4096 bits",
                            order, order - 1);
    }

    const Real lambda = Real(rec.lambda);
    const Real c0(m.c[0]);
    SpectralApproximant a;
    a.order = order;
    a.precision_bits = bits;
    a.source = "quadrature";
    a.atoms.resize(order);
    for (int j = 0; j < order; ++j) {
      Real u = lambda * atoms.x[j];
      if (u < 0) u = 0;  // clamp rounding-level negatives
      a.atoms[j].omega = sqrt(u).convert_to<double>();
      a.atoms[j].rho = (c0 * atoms.w[j]).convert_to<double>();
    }
    std::sort(a.atoms.begin(), a.atoms.end(),
              [](const SpectralAtom& l, const SpectralAtom& r) {
                return l.omega < r.omega;
              });
    a.moment_residuals = moment_match_residuals(a, m);
    return a;
  }
  throw std::logic_error("unreachable");
}

std::vector<double> moment_match_residuals(const SpectralApproximant& a,
                                           const MomentSequence& m) {
  const std::size_t L =
      std::min<std::size_t>(2 * static_cast<std::size_t>(a.order), m.c.size());
  std::vector<Rat> rho, w2, pw;
  for (const SpectralAtom& atom : a.atoms) {
    rho.push_back(Rat(atom.rho));
    w2.push_back(Rat(atom.omega) * Rat(atom.omega));
    pw.push_back(Rat(1));
  }
  std::vector<double> out(L);
  for (std::size_t k = 0; k < L; ++k) {
    Rat s(0);
    for (std::size_t j = 0; j < rho.size(); ++j) {
      s += rho[j] * pw[j];
      pw[j] *= w2[j];
    }
    Rat denom = Rat(m.c[k]);
    if (denom < 0) denom = -denom;
    if (denom == 0) denom = 1;
    Rat r = (s - Rat(m.c[k])) / denom;
    if (r < 0) r = -r;
    out[k] = r.convert_to<double>();
  }
  return out;
}

std::complex<double> laplace_approximant(const SpectralApproximant& a,
                                         std::complex<double> s) {
  std::complex<double> sum(0.0, 0.0);
  for (const SpectralAtom& atom : a.atoms) {
    const std::complex<double> denom = s * s + atom.omega * atom.omega;
    if (std::abs(denom) == 0.0) {
      throw std::domain_error("evaluation point coincides with a pole");
    }
    sum += atom.rho / denom;
  }
  return s * sum;
}

double correlation_reconstruction(const SpectralApproximant& a, double t) {
  Accumulator acc;
  for (const SpectralAtom& atom : a.atoms) {
    acc.add(atom.rho * std::cos(atom.omega * t));
  }
  return acc.value();
}

IsolationReport isolation_diagnostic(
    const std::vector<SpectralApproximant>& by_order) {
  IsolationReport rep;
  for (const SpectralApproximant& a : by_order) {
    IsolationRow row;
    row.order = a.order;
    double total = 0.0;
    const SpectralAtom* top = nullptr;
    for (const SpectralAtom& atom : a.atoms) {
      total += atom.rho;
      if (!top || atom.rho > top->rho) top = &atom;
    }
    if (top) {
      row.dominant_omega = top->omega;
      row.dominant_rho = top->rho;
      row.dominant_fraction = total > 0.0 ? top->rho / total : 0.0;
    }
    row.min_gap = 0.0;
    for (std::size_t i = 1; i < a.atoms.size(); ++i) {
      const double gap = a.atoms[i].omega - a.atoms[i - 1].omega;
      if (i == 1 || gap < row.min_gap) row.min_gap = gap;
    }
    rep.rows.push_back(row);
  }

  if (rep.rows.empty()) {
    rep.verdict = "inconclusive";
    return rep;
  }
  if (rep.rows.size() == 1) {
    // One admissible order carrying all its mass in a single atom is the pure
    // point case; anything else cannot be judged from one run.
    rep.drift = 0.0;
    rep.verdict = rep.rows[0].dominant_fraction > 1.0 - 1e-9
                      ? "isolation-indication"
                      : "inconclusive";
    return rep;
  }
  // Movement of the dominant atom over the last two order increments (one if
  // only two runs exist). An isolated line freezes as the order grows; a
  // smooth measure keeps splitting mass onto new atoms, so its dominant atom
  // slides and sheds weight order after order.
  const IsolationRow& base =
      rep.rows[rep.rows.size() >= 3 ? rep.rows.size() - 3 : 0];
  const IsolationRow& last = rep.rows.back();
  const double dw = std::abs(last.dominant_omega - base.dominant_omega) /
                    std::max(std::abs(base.dominant_omega), 1e-300);
  const double dr = std::abs(last.dominant_rho - base.dominant_rho) /
                    std::max(std::abs(base.dominant_rho), 1e-300);
  rep.drift = std::max(dw, dr);
  const bool spreading = last.dominant_fraction < base.dominant_fraction;
  if (last.dominant_fraction > 0.9 && rep.drift < 0.1) {
    rep.verdict = "isolation-indication";
  } else if (last.dominant_fraction <= 0.9 || (spreading && rep.drift >= 0.1)) {
    rep.verdict = "dense-indication";
  } else {
    rep.verdict = "inconclusive";
  }
  return rep;
}

}  // namespace acsm
