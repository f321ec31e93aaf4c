#include "acsm/reference_functions.hpp"

#include <cmath>
#include <stdexcept>

#include "mp_support.hpp"

namespace acsm {
namespace {

// E_{2n} with alternating signs; |E_2n| is returned by the public helpers.
std::vector<mp::Int> signed_secant(int n_max) {
  std::vector<mp::Int> e(n_max + 1);
  e[0] = 1;
  for (int n = 1; n <= n_max; ++n) {
    mp::Int sum = 0;
    for (int j = 0; j < n; ++j) {
      sum += mp::binomial_int(2 * n, 2 * j) * e[j];
    }
    e[n] = -sum;
  }
  return e;
}

}  // namespace

std::vector<std::string> secant_numbers_exact(int n_max) {
  if (n_max < 0) throw std::invalid_argument("n_max must be >= 0");
  const auto e = signed_secant(n_max);
  std::vector<std::string> out;
  out.reserve(n_max + 1);
  for (const mp::Int& v : e) {
    out.push_back(mp::Int(abs(v)).str());
  }
  return out;
}

MomentSequence sech_moments(double b, int n_max) {
  if (!(b > 0.0)) throw std::invalid_argument("scale b must be positive");
  if (n_max < 0) throw std::invalid_argument("n_max must be >= 0");
  const auto e = signed_secant(n_max);
  MomentSequence m;
  m.c.resize(n_max + 1);
  m.stderr_c.assign(n_max + 1, 0.0);
  m.source = "analytic";
  m.observable = "sech-reference b=" + std::to_string(b);
  // Form |E_2n| exactly, round once, then scale by the power of b.
  for (int n = 0; n <= n_max; ++n) {
    const double en = abs(e[n]).convert_to<double>();
    m.c[n] = en * std::pow(b, 2.0 * n);
  }
  return m;
}

double calibrate_scale(const MomentSequence& m) {
  if (m.c.size() < 2) throw std::invalid_argument("need c_0 and c_1");
  if (!(m.c[0] > 0.0) || !(m.c[1] > 0.0)) {
    throw std::invalid_argument("c_0 and c_1 must be positive");
  }
  return std::sqrt(m.c[1] / m.c[0]);
}

}  // namespace acsm
