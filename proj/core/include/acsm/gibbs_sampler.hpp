#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "acsm/fpu_model.hpp"
#include "acsm/observable.hpp"
#include "acsm/rng.hpp"

namespace acsm {

struct SamplerError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Exact equilibrium sampler. The Gibbs density factorizes over momenta
// (independent Gaussians of variance T) and bond lengths (i.i.d. with density
// proportional to exp(-V(b)/T)), so no Markov chain is needed. Bonds are drawn
// by inverting a tabulated CDF built once per (alpha, beta, T).
class BondSampler {
 public:
  explicit BondSampler(const FpuParams& params);

  // Maps a uniform (0,1] variate to a bond length.
  double sample(double u) const;

  double density_unnormalized(double b) const;  // exp(-(V(b)-Vmin)/T)
  double total_mass() const { return mass_; }
  double support_lo() const { return lo_; }
  double support_hi() const { return hi_; }
  // CDF of the normalized bond density; used by accuracy checks.
  double cdf(double b) const;
  int grid_size() const { return static_cast<int>(nodes_.size()) - 1; }

 private:
  double invert_exact(double target_mass) const;

  double alpha_, beta_, temperature_;
  double v_min_ = 0.0;
  double lo_ = 0.0, hi_ = 0.0;
  double mass_ = 0.0;
  // Inverse CDF tabulated at uniform CDF fractions i/M, with node slopes
  // db/du for monotone cubic interpolation between them.
  std::vector<double> nodes_;
  std::vector<double> slopes_;
  // Panel decomposition of the support from the adaptive quadrature pass.
  std::vector<double> panel_x_;
  std::vector<double> panel_cum_;
};

// Struct-of-arrays sample container; point i occupies q[i*N .. i*N+N-1].
struct SampleSet {
  FpuParams params;
  std::uint64_t seed = 0;
  std::string generator_id;
  std::size_t n_points = 0;
  std::vector<double> q;
  std::vector<double> p;

  int n_particles() const { return params.n_particles; }
  PhasePoint point(std::size_t i) const;
  void append(const PhasePoint& x);
};

SampleSet draw_sample(const ChainModel& model, std::uint64_t seed,
                      std::size_t n_points, int threads = 1);

// Draw a single equilibrium point from the stream (momenta first, then bonds).
PhasePoint sample_state(const ChainModel& model, const BondSampler& bonds,
                        RngStream& stream);

// Least-squares coefficients of H in the low-mode energy and half-kinetic
// observables. Requires more than 100 points and a non-degenerate energy.
ProjectionCoeffs estimate_projection(const ChainModel& model,
                                     const SampleSet& sample);

}  // namespace acsm
