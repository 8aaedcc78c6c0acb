#pragma once

#include <vector>

#include "qsd/finite_kernel.hpp"
#include "qsd/measure.hpp"

namespace qsd {

// Measure-valued flows on the simplex driven by the expected-occupation map:
//   normalized   d/dt nu = -nu + pi(nu)
//   mass form    d/ds mu = mu A_mu - (mu A_mu 1) mu,  A_mu = (I - K_mu)^{-1}
// The two are the same trajectory up to the clock change ds/dt = mu A_mu 1.

struct OdePath {
  std::vector<double> times;                 // strictly increasing
  std::vector<std::vector<double>> values;   // probability vector per node
  // Internal-clock position s at each node (filled by integrate_linearized).
  // Discrete slopes (tau[i+1]-tau[i])/(times[i+1]-times[i]) lie in [1/c, 1]
  // with c = sup ||A_mu 1||_inf, since dt/ds = mu A_mu 1 is in [1, c].
  std::vector<double> tau;
};

struct OdeOptions {
  double dt = 1e-3;
  int store_every = 1;     // keep every n-th node; first and last always kept
  double mass_tol = 1e-6;  // allowed pre-renormalization mass drift per step
};

// Total-variation gap to the occupation map's output, ||nu - pi(nu)||.
double qsd_ode_residual(const KernelFamily& fam, const std::vector<double>& nu);

// Fixed-step RK4 for the normalized flow; iterates are clipped to the
// simplex after each step (the raw drift is O(dt^5) since the field is
// tangent), a larger drift throws a step-size error.
OdePath integrate_qsd_ode(const KernelFamily& fam, const DiscreteMeasure& nu0,
                          double T, const OdeOptions& opts = {});

// Integrates the mass-form equation with uniform steps in its own clock s,
// jointly with dt/ds = mu A_mu 1, until the mapped time t reaches T. Nodes
// are reported in t so values[i] equals the normalized flow at times[i];
// tau[i] is the internal clock position s_i.
OdePath integrate_linearized(const KernelFamily& fam, const DiscreteMeasure& mu0,
                             double T, const OdeOptions& opts = {});

// Runs both integrations from the same start and returns the largest
// node-to-node total-variation gap. The normalized flow is stepped on the
// exact node times produced by the clock map, so the comparison involves no
// interpolation and decays at the integrator's own order.
double check_time_change_equivalence(const KernelFamily& fam,
                                     const DiscreteMeasure& nu0, double T,
                                     double dt);

// Constant-coefficient propagator cross-check: truncated series
// sum_{k<=N} (t A_mu)^k / k!  versus RK4 for Phi' = Phi A_mu from the
// identity. Returns the largest entrywise deviation.
double propagator_series_check(const KernelFamily& fam, const DiscreteMeasure& mu,
                               double t, int N, double dt = 1e-4);

}  // namespace qsd
