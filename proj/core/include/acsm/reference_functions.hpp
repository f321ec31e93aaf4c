#pragma once

#include <string>
#include <vector>

#include "acsm/moment_engine.hpp"

namespace acsm {

// Zigzag (secant) numbers |E_2n| as decimal strings, exact to any order:
// E_0 = 1 and sum_j C(2n, 2j) E_2j = 0. The first few are 1, 1, 5, 61, 1385.
std::vector<std::string> secant_numbers_exact(int n_max);

// Moment sequence of the reference autocorrelation sech(b t):
// c_n = |E_2n| b^(2n). Exact up to rounding of the final double for
// 2n <= 40 and beyond (integers are formed exactly, then rounded once).
MomentSequence sech_moments(double b, int n_max);

// Scale b matched to an estimated sequence through b = sqrt(c_1/c_0).
double calibrate_scale(const MomentSequence& m);

}  // namespace acsm
