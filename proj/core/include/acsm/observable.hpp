#pragma once

#include <string>
#include <vector>

#include "acsm/fpu_model.hpp"

namespace acsm {

// Linear-response coefficients used to project the conserved energy out of an
// observable: f_proj = f - lambda * H with lambda = cov(f, H) / var(H).
// Estimated once from a sample and then frozen.
struct ProjectionCoeffs {
  double lambda_low_mode = 0.0;
  double lambda_half_kinetic = 0.0;
  std::size_t sample_size = 0;
};

// One term c * prod q[i]^a * prod p[j]^b of a custom polynomial observable.
struct MonomialTerm {
  double coeff = 0.0;
  std::vector<std::pair<int, int>> q_pows;  // (particle index, exponent)
  std::vector<std::pair<int, int>> p_pows;
};

struct Observable {
  enum class Kind {
    low_mode_energy,            // banded mode energy, no projection
    low_mode_energy_projected,  // same minus lambda * H
    half_kinetic_projected,     // half-chain kinetic minus lambda * H
    total_energy,
    custom,
  };

  Kind kind = Kind::low_mode_energy;
  ProjectionCoeffs proj;
  std::vector<MonomialTerm> terms;  // custom only

  static Observable low_mode_energy();
  static Observable low_mode_energy_projected(const ProjectionCoeffs& c);
  static Observable half_kinetic_projected(const ProjectionCoeffs& c);
  static Observable total_energy();
  static Observable custom(std::vector<MonomialTerm> terms);
  // Single coordinate q[i] or momentum p[i], handy for scalar tests.
  static Observable position(int i);
  static Observable momentum(int i);

  double evaluate(const ChainModel& model, const PhasePoint& x) const;
  // Stable textual identity (kind plus frozen projection values), recorded in
  // moment files so downstream stages can verify what they consume.
  std::string label() const;
};

}  // namespace acsm
