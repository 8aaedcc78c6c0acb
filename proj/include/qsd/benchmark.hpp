#pragma once

#include <vector>

#include "qsd/analysis.hpp"
#include "qsd/euler.hpp"

namespace qsd {

// Analytically solvable test model: unit-noise diffusion on (-1,1) whose
// drift is the interaction strength gamma times the current occupation
// mean. Its candidate stationary profiles form the tilted-cosine family
// below, indexed by the self-consistent drift value b.

// Unnormalized profile exp(b x) cos(pi x / 2) on [-1,1], normalized by
// high-accuracy composite Simpson quadrature and then renormalized onto the
// grid window.
DensityOnGrid pi_b_density(double b, DensityOnGrid grid);

// Mean of the tilted-cosine profile with tilt c:
//   tanh(c) - 8 c / (4 c^2 + pi^2).
double tilted_cosine_mean(double c);

// Self-consistency map for the drift value: G(b) = mean(gamma b) - b.
// Zeros of G are exactly the admissible stationary drift values.
double drift_consistency_gap(double gamma, double b);

// All zeros of G in [-50, 50] via sign scan (1e5 cells) plus bisection to
// 1e-12. The set is symmetric and always contains 0 (G is odd).
std::vector<double> b_fixed_points(double gamma);

// Below this coupling the self-consistency map is a strict contraction, so
// 0 is the unique drift value: pi^2 / (pi^2 + 8).
double uniqueness_bound_gamma();

// Slope of b -> mean(gamma b) at 0 reaches 1 at pi^2 / (pi^2 - 8); only
// above this coupling does the scan find nonzero drift values.
double root_birth_gamma();

// The model itself: dX = gamma * mean(mu) dt + dW, killed outside (-1,1).
EulerModel benchmark_model(double gamma, double h);

// Inverse-CDF sampler for the b = 0 profile: maps u in (0,1) to
// (2/pi) asin(2u - 1).
double pi0_inverse_cdf(double u);

}  // namespace qsd
