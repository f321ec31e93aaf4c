#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace acsm {

// Anharmonic chain with one end clamped and the other free:
//   H = sum_j p_j^2/2 + sum_j [ b_j^2/2 + alpha*b_j^3/3 + beta*b_j^4/4 ]
// where b_j = q_j - q_{j+1} runs over the N springs and q_0 = 0 is the wall.
// Arrays are 0-based: q[i], p[i] belong to particle i+1.
struct FpuParams {
  int n_particles = 1;
  double alpha = 0.25;
  double beta = 0.25;
  double temperature = 1.0;

  void validate() const;
};

struct PhasePoint {
  std::vector<double> q;
  std::vector<double> p;

  static PhasePoint zero(int n) {
    PhasePoint x;
    x.q.assign(n, 0.0);
    x.p.assign(n, 0.0);
    return x;
  }
};

// b[0] = -q[0]; b[j] = q[j-1] - q[j] for j >= 1.
std::vector<double> bonds_from_positions(const std::vector<double>& q);
std::vector<double> positions_from_bonds(const std::vector<double>& b);

// Spring potential per bond and its derivative.
inline double bond_energy(double b, double alpha, double beta) {
  return b * b * (0.5 + b * (alpha / 3.0 + b * beta / 4.0));
}
inline double bond_tension(double b, double alpha, double beta) {
  return b * (1.0 + b * (alpha + b * beta));
}

class ChainModel {
 public:
  explicit ChainModel(const FpuParams& params);

  const FpuParams& params() const { return params_; }
  int size() const { return params_.n_particles; }

  // Angular frequencies of the linearized chain, ascending. The coupling
  // matrix is tridiagonal with diagonal (2,...,2,1) and off-diagonal -1.
  const std::vector<double>& mode_frequencies() const { return omega_; }
  double max_frequency() const { return omega_.back(); }
  // Orthonormal eigenvectors, column k matching mode_frequencies()[k].
  const Eigen::MatrixXd& mode_vectors() const { return vectors_; }

  // Number of "low" modes entering the banded energy observable.
  int low_mode_count() const { return params_.n_particles / 2 + 1; }
  // Number of particles entering the half-chain kinetic observable.
  int half_count() const { return params_.n_particles / 2; }

  double hamiltonian(const PhasePoint& x) const;
  // Harmonic energies E_k = (P_k^2 + omega_k^2 Q_k^2)/2 per normal mode.
  std::vector<double> mode_energies(const PhasePoint& x) const;

  // Mean energy of the low_mode_count() lowest modes, divided by N.
  double low_mode_energy(const PhasePoint& x) const;
  // Kinetic energy of the first half_count() particles.
  double half_kinetic(const PhasePoint& x) const;

  // Force on each particle, -dV/dq, for positions q.
  void forces(const std::vector<double>& q, std::vector<double>& f) const;

 private:
  FpuParams params_;
  std::vector<double> omega_;
  Eigen::MatrixXd vectors_;
};

}  // namespace acsm
