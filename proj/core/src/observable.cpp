#include "acsm/observable.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "acsm/parallel.hpp"

namespace acsm {

Observable Observable::low_mode_energy() {
  Observable f;
  f.kind = Kind::low_mode_energy;
  return f;
}

Observable Observable::low_mode_energy_projected(const ProjectionCoeffs& c) {
  Observable f;
  f.kind = Kind::low_mode_energy_projected;
  f.proj = c;
  return f;
}

Observable Observable::half_kinetic_projected(const ProjectionCoeffs& c) {
  Observable f;
  f.kind = Kind::half_kinetic_projected;
  f.proj = c;
  return f;
}

Observable Observable::total_energy() {
  Observable f;
  f.kind = Kind::total_energy;
  return f;
}

Observable Observable::custom(std::vector<MonomialTerm> terms) {
  Observable f;
  f.kind = Kind::custom;
  f.terms = std::move(terms);
  return f;
}

Observable Observable::position(int i) {
  MonomialTerm t;
  t.coeff = 1.0;
  t.q_pows = {{i, 1}};
  return custom({t});
}

Observable Observable::momentum(int i) {
  MonomialTerm t;
  t.coeff = 1.0;
  t.p_pows = {{i, 1}};
  return custom({t});
}

double Observable::evaluate(const ChainModel& model, const PhasePoint& x) const {
  switch (kind) {
    case Kind::low_mode_energy:
      return model.low_mode_energy(x);
    case Kind::low_mode_energy_projected:
      return model.low_mode_energy(x) - proj.lambda_low_mode * model.hamiltonian(x);
    case Kind::half_kinetic_projected:
      return model.half_kinetic(x) - proj.lambda_half_kinetic * model.hamiltonian(x);
    case Kind::total_energy:
      return model.hamiltonian(x);
    case Kind::custom: {
      Accumulator acc;
      for (const auto& term : terms) {
        double v = term.coeff;
        for (auto [i, e] : term.q_pows)
          for (int r = 0; r < e; ++r) v *= x.q[i];
        for (auto [i, e] : term.p_pows)
          for (int r = 0; r < e; ++r) v *= x.p[i];
        acc.add(v);
      }
      return acc.value();
    }
  }
  throw std::logic_error("unreachable observable kind");
}

std::string Observable::label() const {
  char buf[96];
  switch (kind) {
    case Kind::low_mode_energy:
      return "low-mode-energy";
    case Kind::low_mode_energy_projected:
      std::snprintf(buf, sizeof buf, "low-mode-energy-proj(lambda=%.17g)",
                    proj.lambda_low_mode);
      return buf;
    case Kind::half_kinetic_projected:
      std::snprintf(buf, sizeof buf, "half-kinetic-proj(lambda=%.17g)",
                    proj.lambda_half_kinetic);
      return buf;
    case Kind::total_energy:
      return "total-energy";
    case Kind::custom: {
      std::string s = "custom";
      for (const auto& term : terms) {
        std::snprintf(buf, sizeof buf, ":%.17g", term.coeff);
        s += buf;
        for (auto [i, e] : term.q_pows) {
          std::snprintf(buf, sizeof buf, "*q%d^%d", i, e);
          s += buf;
        }
        for (auto [i, e] : term.p_pows) {
          std::snprintf(buf, sizeof buf, "*p%d^%d", i, e);
          s += buf;
        }
      }
      return s;
    }
  }
  return "unknown";
}

}  // namespace acsm
