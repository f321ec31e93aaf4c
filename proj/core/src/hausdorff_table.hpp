#pragma once

// Internal finite-difference tables for the compactified-measure criterion.
// Templated on the number type: exact rationals certify the small fixtures,
// mpfr reals carry the production path. Every value is paired with a
// propagated absolute uncertainty bound so the caller can tell a genuine
// table entry from alternating-sum noise.

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace acsm::detail {

template <class Num>
struct HausdorffTables {
  // sup_val[k][p] = max over admissible m of (p+1) |lambda^k_{p,m}|;
  // sup_err[k][p] is the same functional applied to the uncertainty bounds.
  // Levels with no admissible m (p < 2k) hold zero.
  std::vector<std::vector<Num>> sup_val, sup_err;
};

template <class Num>
Num num_abs(const Num& x) {
  return x < 0 ? Num(-x) : x;
}

// lambda^0_{p,m} = C(p,m) sum_k (-1)^k C(p-m,k) mu~_{m+k}
//                = C(p,m) (D^{p-m} mu~)_m,
// with the forward-difference table D^j_m = D^{j-1}_m - D^{j-1}_{m+1};
// lambda^k_{p,m} = (p+1)(lambda^{k-1}_{p,m} - lambda^{k-1}_{p,m-1}) for
// k <= m <= p-k. Uncertainties propagate through the same recursions with
// all signs made positive.
template <class Num>
HausdorffTables<Num> hausdorff_lambda_tables(const std::vector<Num>& mu_tilde,
                                             const std::vector<Num>& mu_err,
                                             int p_max, int k_levels) {
  if (p_max < 1) throw std::invalid_argument("p_max must be >= 1");
  if (k_levels < 1) throw std::invalid_argument("need at least level k = 0");
  if (mu_tilde.size() < static_cast<std::size_t>(p_max) + 1 ||
      mu_err.size() != mu_tilde.size()) {
    throw std::invalid_argument("mu~ table shorter than p_max + 1");
  }

  const int np = p_max + 1;
  auto tri = [np](std::vector<std::vector<Num>>& t) {
    t.assign(np, {});
    for (int j = 0; j < np; ++j) t[j].assign(np - j, Num(0));
  };
  std::vector<std::vector<Num>> d, derr;
  tri(d);
  tri(derr);
  for (int m = 0; m < np; ++m) {
    d[0][m] = mu_tilde[m];
    derr[0][m] = mu_err[m];
  }
  for (int j = 1; j < np; ++j) {
    for (int m = 0; m + j < np; ++m) {
      d[j][m] = d[j - 1][m] - d[j - 1][m + 1];
      derr[j][m] = derr[j - 1][m] + derr[j - 1][m + 1];
    }
  }

  std::vector<std::vector<Num>> binom(np);
  for (int p = 0; p < np; ++p) {
    binom[p].assign(p + 1, Num(1));
    for (int m = 1; m < p; ++m) binom[p][m] = binom[p - 1][m - 1] + binom[p - 1][m];
  }

  HausdorffTables<Num> out;
  out.sup_val.assign(k_levels, std::vector<Num>(np, Num(0)));
  out.sup_err.assign(k_levels, std::vector<Num>(np, Num(0)));

  std::vector<Num> lam, err, lam_next, err_next;
  for (int p = 0; p < np; ++p) {
    lam.assign(p + 1, Num(0));
    err.assign(p + 1, Num(0));
    for (int m = 0; m <= p; ++m) {
      lam[m] = binom[p][m] * d[p - m][m];
      err[m] = binom[p][m] * derr[p - m][m];
    }
    const Num pp1(p + 1);
    for (int k = 0; k < k_levels; ++k) {
      if (k > 0) {
        lam_next.assign(p + 1, Num(0));
        err_next.assign(p + 1, Num(0));
        for (int m = k; m <= p - k; ++m) {
          lam_next[m] = pp1 * (lam[m] - lam[m - 1]);
          err_next[m] = pp1 * (err[m] + err[m - 1]);
        }
        lam.swap(lam_next);
        err.swap(err_next);
      }
      Num best(0), best_err(0);
      for (int m = k; m <= p - k; ++m) {
        const Num v = pp1 * num_abs(lam[m]);
        const Num e = pp1 * err[m];
        if (v > best) best = v;
        if (e > best_err) best_err = e;
      }
      out.sup_val[k][p] = best;
      out.sup_err[k][p] = best_err;
    }
  }
  return out;
}

}  // namespace acsm::detail
