#include "acsm/lie_derivatives.hpp"

#include <cmath>
#include <stdexcept>

#include "acsm/parallel.hpp"

namespace acsm {

Jet& Jet::operator+=(const Jet& o) {
  if (o.order() != order()) throw std::invalid_argument("jet order mismatch");
  for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
  return *this;
}

Jet& Jet::operator-=(const Jet& o) {
  if (o.order() != order()) throw std::invalid_argument("jet order mismatch");
  for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
  return *this;
}

Jet& Jet::scale(double s) {
  for (double& x : c_) x *= s;
  return *this;
}

Jet& Jet::add_scaled(const Jet& o, double s) {
  if (o.order() != order()) throw std::invalid_argument("jet order mismatch");
  for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += s * o.c_[i];
  return *this;
}

double cauchy_coeff(std::span<const double> a, std::span<const double> b, int m) {
  Accumulator acc;
  for (int i = 0; i <= m; ++i) acc.add(a[i] * b[m - i]);
  return acc.value();
}

Jet jet_mul(const Jet& a, const Jet& b) {
  if (a.order() != b.order()) throw std::invalid_argument("jet order mismatch");
  Jet out(a.order());
  for (int m = 0; m <= a.order(); ++m) {
    out[m] = cauchy_coeff(a.coeffs(), b.coeffs(), m);
  }
  return out;
}

namespace {

// Progressive coefficient rows for all bonds: b, b^2 and b^3 extended one
// order at a time so the force recurrence only ever reads settled entries.
struct BondRows {
  std::vector<std::vector<double>> b, b2, b3;

  BondRows(int n, int order)
      : b(n, std::vector<double>(order + 1, 0.0)), b2(b), b3(b) {}

  void extend(const std::vector<Jet>& q, int m) {
    const int n = static_cast<int>(b.size());
    for (int j = 0; j < n; ++j) {
      b[j][m] = (j == 0 ? -q[0][m] : q[j - 1][m] - q[j][m]);
    }
    for (int j = 0; j < n; ++j) {
      b2[j][m] = cauchy_coeff(b[j], b[j], m);
      b3[j][m] = cauchy_coeff(b2[j], b[j], m);
    }
  }

  // Coefficient m of the tension b + alpha b^2 + beta b^3 of bond j.
  double tension(int j, int m, double alpha, double beta) const {
    return b[j][m] + alpha * b2[j][m] + beta * b3[j][m];
  }
};

}  // namespace

TrajectoryJets trajectory_jet(const ChainModel& model, const PhasePoint& x,
                              int order) {
  if (order < 0 || order > kJetOrderCap) {
    throw std::invalid_argument("jet order outside [0, cap]");
  }
  const int n = model.size();
  const double alpha = model.params().alpha, beta = model.params().beta;
  TrajectoryJets out;
  out.order = order;
  out.q.assign(n, Jet(order));
  out.p.assign(n, Jet(order));
  for (int j = 0; j < n; ++j) {
    out.q[j][0] = x.q[j];
    out.p[j][0] = x.p[j];
  }

  BondRows rows(n, order);
  for (int m = 0; m < order; ++m) {
    rows.extend(out.q, m);
    for (int j = 0; j < n; ++j) {
      const double left = rows.tension(j, m, alpha, beta);
      const double right = (j + 1 < n) ? rows.tension(j + 1, m, alpha, beta) : 0.0;
      out.p[j][m + 1] = (left - right) / (m + 1);
      out.q[j][m + 1] = out.p[j][m] / (m + 1);
    }
  }
  return out;
}

namespace {

Jet hamiltonian_jet(const ChainModel& model, const TrajectoryJets& t) {
  const int n = model.size();
  const int order = t.order;
  const double alpha = model.params().alpha, beta = model.params().beta;
  Jet h(order);
  std::vector<Accumulator> acc(order + 1);
  for (int j = 0; j < n; ++j) {
    const Jet p2 = jet_mul(t.p[j], t.p[j]);
    Jet bj(order);
    for (int m = 0; m <= order; ++m) {
      bj[m] = (j == 0 ? -t.q[0][m] : t.q[j - 1][m] - t.q[j][m]);
    }
    const Jet b2 = jet_mul(bj, bj);
    const Jet b3 = jet_mul(b2, bj);
    const Jet b4 = jet_mul(b2, b2);
    for (int m = 0; m <= order; ++m) {
      acc[m].add(0.5 * p2[m]);
      acc[m].add(0.5 * b2[m] + (alpha / 3.0) * b3[m] + (beta / 4.0) * b4[m]);
    }
  }
  for (int m = 0; m <= order; ++m) h[m] = acc[m].value();
  return h;
}

Jet low_mode_energy_jet(const ChainModel& model, const TrajectoryJets& t) {
  const int n = model.size();
  const int order = t.order;
  const auto& v = model.mode_vectors();
  const auto& omega = model.mode_frequencies();
  std::vector<Accumulator> acc(order + 1);
  for (int k = 0; k < model.low_mode_count(); ++k) {
    Jet qk(order), pk(order);
    for (int m = 0; m <= order; ++m) {
      Accumulator aq, ap;
      for (int j = 0; j < n; ++j) {
        aq.add(v(j, k) * t.q[j][m]);
        ap.add(v(j, k) * t.p[j][m]);
      }
      qk[m] = aq.value();
      pk[m] = ap.value();
    }
    const Jet q2 = jet_mul(qk, qk);
    const Jet p2 = jet_mul(pk, pk);
    const double w2 = omega[k] * omega[k];
    for (int m = 0; m <= order; ++m) acc[m].add(0.5 * (p2[m] + w2 * q2[m]));
  }
  Jet e(order);
  for (int m = 0; m <= order; ++m) e[m] = acc[m].value() / n;
  return e;
}

Jet half_kinetic_jet(const ChainModel& model, const TrajectoryJets& t) {
  const int order = t.order;
  std::vector<Accumulator> acc(order + 1);
  for (int j = 0; j < model.half_count(); ++j) {
    const Jet p2 = jet_mul(t.p[j], t.p[j]);
    for (int m = 0; m <= order; ++m) acc[m].add(0.5 * p2[m]);
  }
  Jet e(order);
  for (int m = 0; m <= order; ++m) e[m] = acc[m].value();
  return e;
}

Jet monomial_jet(const TrajectoryJets& t, const Observable& f) {
  const int order = t.order;
  Jet sum(order);
  for (const auto& term : f.terms) {
    Jet prod = Jet::constant(term.coeff, order);
    for (const auto& [idx, pow] : term.q_pows) {
      for (int r = 0; r < pow; ++r) prod = jet_mul(prod, t.q[idx]);
    }
    for (const auto& [idx, pow] : term.p_pows) {
      for (int r = 0; r < pow; ++r) prod = jet_mul(prod, t.p[idx]);
    }
    sum += prod;
  }
  return sum;
}

}  // namespace

Jet observable_jet(const ChainModel& model, const PhasePoint& x,
                   const Observable& f, int order) {
  const TrajectoryJets t = trajectory_jet(model, x, order);
  switch (f.kind) {
    case Observable::Kind::low_mode_energy:
      return low_mode_energy_jet(model, t);
    case Observable::Kind::low_mode_energy_projected: {
      Jet e = low_mode_energy_jet(model, t);
      e.add_scaled(hamiltonian_jet(model, t), -f.proj.lambda_low_mode);
      return e;
    }
    case Observable::Kind::half_kinetic_projected: {
      Jet e = half_kinetic_jet(model, t);
      e.add_scaled(hamiltonian_jet(model, t), -f.proj.lambda_half_kinetic);
      return e;
    }
    case Observable::Kind::total_energy:
      return hamiltonian_jet(model, t);
    case Observable::Kind::custom:
      return monomial_jet(t, f);
  }
  throw std::logic_error("unreachable observable kind");
}

std::vector<double> lie_derivatives(const ChainModel& model,
                                    const PhasePoint& x, const Observable& f,
                                    int max_n, int order_cap) {
  if (max_n < 0) throw std::invalid_argument("derivative count must be >= 0");
  if (max_n > order_cap) {
    throw std::invalid_argument("derivative order exceeds the jet order cap");
  }
  const Jet jet = observable_jet(model, x, f, max_n);
  std::vector<double> d(max_n + 1);
  double fact = 1.0;
  for (int m = 0; m <= max_n; ++m) {
    if (m > 0) fact *= m;
    d[m] = fact * jet[m];
  }
  return d;
}

DerivativePartition first_partition(int n, std::int64_t s) {
  if (n < 1 || s < 0) throw std::invalid_argument("bad partition shape");
  DerivativePartition t;
  t.k.assign(n, 0);
  t.mass = s;
  std::int64_t rem = s;
  for (int j = n; j >= 1; --j) {
    t.k[j - 1] = rem / j;
    rem %= j;
  }
  return t;
}

bool next_partition(DerivativePartition& t) {
  const int n = static_cast<int>(t.k.size());
  // Find the smallest part >= 2 that can donate; its mass plus everything in
  // part 1 gets refilled greedily below it.
  for (int m = 2; m <= n; ++m) {
    if (t.k[m - 1] == 0) continue;
    t.k[m - 1] -= 1;
    std::int64_t rem = t.k[0] + m;
    t.k[0] = 0;
    for (int j = m - 1; j >= 1; --j) {
      t.k[j - 1] = rem / j;
      rem %= j;
    }
    return true;
  }
  return false;
}

double compose_derivatives(std::span<const double> f_derivs,
                           std::span<const double> g_derivs, int n) {
  if (n < 0 || n > kJetOrderCap) {
    throw std::invalid_argument("composition order outside [0, cap]");
  }
  if (f_derivs.size() < static_cast<std::size_t>(n) + 1 ||
      g_derivs.size() < static_cast<std::size_t>(n)) {
    throw std::invalid_argument("derivative lists too short for requested order");
  }
  if (n == 0) return f_derivs[0];

  // Exact integer factorials up to n <= 24 fit in 128 bits; every final
  // multinomial weight is below 2^63.
  auto fact128 = [](int m) {
    __int128 r = 1;
    for (int i = 2; i <= m; ++i) r *= i;
    return r;
  };

  Accumulator sum;
  DerivativePartition part = first_partition(n, n);
  do {
    __int128 denom = 1;
    int total_blocks = 0;
    double prod = 1.0;
    for (int j = 1; j <= n; ++j) {
      const std::int64_t kj = part.k[j - 1];
      if (kj == 0) continue;
      total_blocks += static_cast<int>(kj);
      denom *= fact128(static_cast<int>(kj));
      for (std::int64_t r = 0; r < kj; ++r) {
        denom *= fact128(j);
        prod *= g_derivs[j - 1];
      }
    }
    const double weight = static_cast<double>(
        static_cast<std::int64_t>(fact128(n) / denom));
    sum.add(weight * f_derivs[total_blocks] * prod);
  } while (next_partition(part));
  return sum.value();
}

}  // namespace acsm
