#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "acsm/gibbs_sampler.hpp"
#include "acsm/lie_derivatives.hpp"

namespace acsm {

// Spectral moments c_n: c_0 is the variance of f, c_n the variance of the
// n-th iterated time derivative of f. All entries are nonnegative by
// construction (each is a sum of squared deviations).
struct MomentSequence {
  std::vector<double> c;
  std::vector<double> stderr_c;
  std::size_t n_samples = 0;
  std::string observable;
  std::optional<FpuParams> params;
  std::uint64_t seed = 0;
  std::string source;  // "sampled", "analytic", "file", ...

  int max_order() const { return static_cast<int>(c.size()) - 1; }
};

// Per-point derivative values: row i holds f(x_i), f'(x_i), ..., f^(max_n)(x_i).
struct DerivativeTable {
  std::size_t n_points = 0;
  int max_n = 0;
  std::vector<double> values;  // n_points x (max_n + 1), row major

  double at(std::size_t i, int n) const { return values[i * (max_n + 1) + n]; }
};

DerivativeTable derivative_table(const ChainModel& model,
                                 const SampleSet& sample, const Observable& f,
                                 int max_n, int threads = 1,
                                 int order_cap = kJetOrderCap);

// Block statistics reused by the jackknife: contiguous equal blocks.
struct MomentEstimate {
  MomentSequence moments;
  // Leave-one-block-out replicate sequences, one row per block.
  std::vector<std::vector<double>> jackknife_c;
};

MomentEstimate moments_from_table(const DerivativeTable& table, int blocks);

MomentEstimate estimate_moments(const ChainModel& model,
                                const SampleSet& sample, const Observable& f,
                                int max_n, int blocks = 20, int threads = 1,
                                int order_cap = kJetOrderCap);

// --- solvability gates ---------------------------------------------------
//
// H_n  = det [c_{i+j}]      (i, j = 0..n)   and
// H1_n = det [c_{i+j+1}]    (i, j = 0..n)
// must both be nonnegative for a representing measure on [0, inf) to exist.
// Signs are certified: determinants are evaluated in exact rational
// arithmetic on the given (exactly binary) inputs, so a reported sign is
// never a rounding artifact. Reported det values are rounded to double.
struct HankelReport {
  std::vector<double> det_h;        // H_0 .. H_max
  std::vector<double> det_h1;      // H1_0 .. H1_max
  std::vector<int> sign_h;          // -1, 0, +1, certified
  std::vector<int> sign_h1;
  std::optional<int> first_negative_order;
  int precision_bits = 0;  // precision used downstream; signs here are exact
};

HankelReport hankel_check(const MomentSequence& m, int precision_bits = 512);

// Growth certificate c_n <= D^n (2n)!; returns d_n = (c_n/(2n)!)^(1/n) and
// their supremum, the smallest admissible D for the data seen so far.
struct UniquenessEstimate {
  std::vector<double> d;  // index n-1 holds d_n
  double d_sup = 0.0;
};

UniquenessEstimate uniqueness_bound(const MomentSequence& m);

// --- moment file IO (JSON) ------------------------------------------------
void write_moment_file(const std::string& path, const MomentEstimate& est,
                       const std::string& config_digest);
MomentEstimate read_moment_file(const std::string& path);

}  // namespace acsm
