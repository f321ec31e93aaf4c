#include "acsm/fpu_model.hpp"

#include <cmath>

#include "acsm/parallel.hpp"

namespace acsm {

void FpuParams::validate() const {
  if (n_particles < 1) throw std::invalid_argument("n_particles must be >= 1");
  if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be > 0");
  if (!std::isfinite(alpha) || !std::isfinite(beta)) {
    throw std::invalid_argument("alpha/beta must be finite");
  }
  if (beta < 0.0) throw std::invalid_argument("beta must be >= 0");
  // With beta = 0 a cubic term makes the bond potential unbounded below.
  if (beta == 0.0 && alpha != 0.0) {
    throw std::invalid_argument("alpha != 0 requires beta > 0");
  }
}

std::vector<double> bonds_from_positions(const std::vector<double>& q) {
  std::vector<double> b(q.size());
  if (q.empty()) return b;
  b[0] = -q[0];
  for (std::size_t j = 1; j < q.size(); ++j) b[j] = q[j - 1] - q[j];
  return b;
}

std::vector<double> positions_from_bonds(const std::vector<double>& b) {
  std::vector<double> q(b.size());
  double acc = 0.0;
  for (std::size_t j = 0; j < b.size(); ++j) {
    acc += b[j];
    q[j] = -acc;
  }
  return q;
}

ChainModel::ChainModel(const FpuParams& params) : params_(params) {
  params_.validate();
  const int n = params_.n_particles;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    a(i, i) = 2.0;
    if (i + 1 < n) {
      a(i, i + 1) = -1.0;
      a(i + 1, i) = -1.0;
    }
  }
  a(n - 1, n - 1) = 1.0;  // free end carries a single spring
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("eigendecomposition of the coupling matrix failed");
  }
  vectors_ = solver.eigenvectors();
  omega_.resize(n);
  for (int k = 0; k < n; ++k) omega_[k] = std::sqrt(solver.eigenvalues()[k]);
}

double ChainModel::hamiltonian(const PhasePoint& x) const {
  Accumulator acc;
  for (double pi : x.p) acc.add(0.5 * pi * pi);
  const auto b = bonds_from_positions(x.q);
  for (double bj : b) acc.add(bond_energy(bj, params_.alpha, params_.beta));
  return acc.value();
}

std::vector<double> ChainModel::mode_energies(const PhasePoint& x) const {
  const int n = params_.n_particles;
  std::vector<double> e(n);
  for (int k = 0; k < n; ++k) {
    Accumulator qk, pk;
    for (int j = 0; j < n; ++j) {
      qk.add(vectors_(j, k) * x.q[j]);
      pk.add(vectors_(j, k) * x.p[j]);
    }
    const double qv = qk.value(), pv = pk.value();
    e[k] = 0.5 * (pv * pv + omega_[k] * omega_[k] * qv * qv);
  }
  return e;
}

double ChainModel::low_mode_energy(const PhasePoint& x) const {
  const auto e = mode_energies(x);
  Accumulator acc;
  for (int k = 0; k < low_mode_count(); ++k) acc.add(e[k]);
  return acc.value() / params_.n_particles;
}

double ChainModel::half_kinetic(const PhasePoint& x) const {
  Accumulator acc;
  for (int j = 0; j < half_count(); ++j) acc.add(0.5 * x.p[j] * x.p[j]);
  return acc.value();
}

void ChainModel::forces(const std::vector<double>& q,
                        std::vector<double>& f) const {
  const int n = params_.n_particles;
  f.resize(n);
  // Tension of bond j on its two neighbors; bond n does not exist.
  double left = bond_tension(-q[0], params_.alpha, params_.beta);
  for (int i = 0; i < n; ++i) {
    double right = (i + 1 < n)
                       ? bond_tension(q[i] - q[i + 1], params_.alpha, params_.beta)
                       : 0.0;
    f[i] = left - right;
    left = right;
  }
}

}  // namespace acsm
