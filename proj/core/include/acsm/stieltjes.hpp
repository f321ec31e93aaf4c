#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include "acsm/moment_engine.hpp"

namespace acsm {

// Discrete spectral measure: autocorrelation approximant
//   C_n(t) = sum_k rho_k cos(omega_k t),
// equivalently a Laplace-transform approximant with poles at +-i*omega_k.
struct SpectralAtom {
  double omega = 0.0;
  double rho = 0.0;
};

struct SpectralApproximant {
  std::vector<SpectralAtom> atoms;  // ascending omega
  int order = 0;
  // |sum_k rho_k omega_k^(2m) - c_m| / c_m for m < 2*order, evaluated in
  // exact rational arithmetic on the double-rounded atoms.
  std::vector<double> moment_residuals;
  int precision_bits = 0;  // working precision that produced the atoms
  std::string source;
};

// Raised when the moment sequence admits no order-n representation: a
// recurrence quantity (equivalently a Hankel minor) loses positivity, or a
// quadrature node leaves the positive half line.
struct QuadratureError : std::runtime_error {
  QuadratureError(const std::string& what, int failed_order_, int max_valid_)
      : std::runtime_error(what),
        failed_order(failed_order_),
        max_valid_order(max_valid_) {}
  int failed_order;
  int max_valid_order;
};

// Gauss quadrature of the spectral measure from moments c_0..c_{2n-1}:
// moments are conditioned by the scale c_1/c_0, converted to recurrence
// coefficients, and the Jacobi matrix is diagonalized, all in arbitrary
// precision. Precision is doubled (up to 8x) until the internal residuals
// drop below 1e-20 relative.
SpectralApproximant quadrature_from_moments(const MomentSequence& m, int order,
                                            int precision_bits = 512);

// Exact-rational consistency check of double-rounded atoms against c.
std::vector<double> moment_match_residuals(const SpectralApproximant& a,
                                           const MomentSequence& m);

// s * sum_k rho_k / (s^2 + omega_k^2); throws std::domain_error on a pole.
std::complex<double> laplace_approximant(const SpectralApproximant& a,
                                         std::complex<double> s);

double correlation_reconstruction(const SpectralApproximant& a, double t);

// Stability of the dominant atom across truncation orders.
struct IsolationRow {
  int order = 0;
  double dominant_omega = 0.0;
  double dominant_rho = 0.0;
  double dominant_fraction = 0.0;  // rho / sum rho
  double min_gap = 0.0;            // smallest spacing of adjacent omegas
};

struct IsolationReport {
  std::vector<IsolationRow> rows;
  // Relative movement of the dominant atom's (omega, rho) over the last two
  // order increments (one if only two runs exist).
  double drift = 0.0;
  // "isolation-indication": dominant atom moved < 10% and carries > 90%;
  //   a single run qualifies only when one atom carries everything.
  // "dense-indication": no atom carries 90% at the top order, or the
  //   dominant atom both moved >= 10% and shed weight.
  // "inconclusive": anything else.
  std::string verdict;
};

IsolationReport isolation_diagnostic(
    const std::vector<SpectralApproximant>& by_order);

}  // namespace acsm
