#pragma once

// Internal arbitrary-precision plumbing shared by the moment-problem code.
// Not installed; public headers expose doubles only.

#include <boost/multiprecision/gmp.hpp>
#include <boost/multiprecision/mpfr.hpp>
#include <vector>

namespace acsm::mp {

using Real = boost::multiprecision::mpfr_float;  // variable precision
using Rat = boost::multiprecision::mpq_rational;
using Int = boost::multiprecision::mpz_int;

// mpfr_float precision is set in decimal digits; round up from bits.
inline void set_precision_bits(int bits) {
  unsigned digits = static_cast<unsigned>(bits * 0.30103) + 4;
  Real::default_precision(digits);
}

inline int sign_of(const Rat& x) { return x.sign(); }

// Exact determinant by fraction-based Gaussian elimination. Pivoting only
// needs any nonzero entry; there is no rounding to stabilize.
inline Rat exact_det(std::vector<std::vector<Rat>> a) {
  const std::size_t n = a.size();
  Rat det = 1;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    while (piv < n && a[piv][col] == 0) ++piv;
    if (piv == n) return Rat(0);
    if (piv != col) {
      std::swap(a[piv], a[col]);
      det = -det;
    }
    det *= a[col][col];
    for (std::size_t r = col + 1; r < n; ++r) {
      if (a[r][col] == 0) continue;
      Rat factor = a[r][col] / a[col][col];
      for (std::size_t c = col; c < n; ++c) a[r][c] -= factor * a[col][c];
    }
  }
  return det;
}

inline Int factorial_int(unsigned n) {
  Int f = 1;
  for (unsigned i = 2; i <= n; ++i) f *= i;
  return f;
}

inline Int binomial_int(unsigned n, unsigned k) {
  if (k > n) return Int(0);
  Int b = 1;
  for (unsigned i = 0; i < k; ++i) {
    b *= (n - i);
    b /= (i + 1);
  }
  return b;
}

}  // namespace acsm::mp
