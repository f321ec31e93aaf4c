#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "acsm/fpu_model.hpp"
#include "acsm/observable.hpp"

namespace acsm {

// Truncated Taylor series in time, c[m] = f^(m)(0)/m!. All products are
// truncated Cauchy products with compensated accumulation.
class Jet {
 public:
  Jet() = default;
  explicit Jet(int order) : c_(order + 1, 0.0) {}
  static Jet constant(double value, int order) {
    Jet j(order);
    j.c_[0] = value;
    return j;
  }

  int order() const { return static_cast<int>(c_.size()) - 1; }
  double operator[](int m) const { return c_[m]; }
  double& operator[](int m) { return c_[m]; }
  const std::vector<double>& coeffs() const { return c_; }

  Jet& operator+=(const Jet& o);
  Jet& operator-=(const Jet& o);
  Jet& scale(double s);
  Jet& add_scaled(const Jet& o, double s);

 private:
  std::vector<double> c_;
};

Jet jet_mul(const Jet& a, const Jet& b);
// Coefficient m of the product a*b, from coefficients 0..m of each factor.
double cauchy_coeff(std::span<const double> a, std::span<const double> b, int m);

// Default cap on Taylor/derivative order; deliberate guard against silently
// requesting astronomically deep derivatives.
inline constexpr int kJetOrderCap = 24;

struct TrajectoryJets {
  std::vector<Jet> q;
  std::vector<Jet> p;
  int order = 0;
};

// Taylor coefficients of the flow through x, generated by the recurrence
//   q_j[m+1] = p_j[m]/(m+1),  p_j[m+1] = F_j(q)[m]/(m+1),
// where the force coefficients come from truncated products on the bond jets.
TrajectoryJets trajectory_jet(const ChainModel& model, const PhasePoint& x,
                              int order);

// Taylor series of t -> f(flow_t(x)).
Jet observable_jet(const ChainModel& model, const PhasePoint& x,
                   const Observable& f, int order);

// Iterated time derivatives f, f', ..., f^(max_n) at x, i.e. repeated Poisson
// brackets of f with H, read off the observable jet as n! * c_n.
std::vector<double> lie_derivatives(const ChainModel& model,
                                    const PhasePoint& x, const Observable& f,
                                    int max_n, int order_cap = kJetOrderCap);

// --- composition of derivative lists -----------------------------------
//
// Multiplicity tuples (k_1, ..., k_n) with sum j*k_j = s, enumerated in the
// order: start from the greedy tuple that fills multiplicities from part n
// down; to advance, find the first index m >= 2 with k_m > 0, decrement it,
// and replace (k_1..k_{m-1}) by the greedy head for the mass k_1 + m; the
// tuple (s, 0, ..., 0) is last.
struct DerivativePartition {
  std::vector<std::int64_t> k;  // k[j-1] = multiplicity of part j
  std::int64_t mass = 0;        // invariant: sum of j * k[j-1]
};

DerivativePartition first_partition(int n, std::int64_t s);
bool next_partition(DerivativePartition& t);

// n-th derivative of f(g(x)) from f-derivatives at g(x) (index 0 = value)
// and g-derivatives at x (index j-1 = g^(j)).
double compose_derivatives(std::span<const double> f_derivs,
                           std::span<const double> g_derivs, int n);

}  // namespace acsm
