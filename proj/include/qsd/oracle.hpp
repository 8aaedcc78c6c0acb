#pragma once

#include <cstdint>
#include <vector>

#include "qsd/finite_kernel.hpp"
#include "qsd/la.hpp"
#include "qsd/measure.hpp"

namespace qsd {

// Exact finite-state reference computations. Everything here is
// deterministic linear algebra on small matrices; the stochastic driver and
// the ODE integrators are validated against these results.

// Uniform-in-mu geometric killing certificate: the smallest ell <= ell_max
// with sup over the supplied measures of the max row sum of K_mu^ell
// strictly below 1, together with that bound rho. With such a pair the
// expected number of surviving steps obeys sup_x E_x[tau] <= ell/(1-rho).
struct H0Report {
  bool ok = false;
  int ell = 0;
  double rho = 1.0;
};
H0Report check_h0(const KernelFamily& fam,
                  const std::vector<DiscreteMeasure>& mu_grid, int ell_max);

// (I - K)^{-1} = sum_{n>=0} K^n, the expected-visits kernel of the killed
// chain. Solved by LU; the explicit series is the independent cross-check.
Mat fundamental_matrix(const Mat& K);
Mat fundamental_series(const Mat& K, double tol = 1e-15, int max_terms = 100000);

// Normalized expected occupation before death started from mu:
// pi(mu) = mu (I-K_mu)^{-1} / (mu (I-K_mu)^{-1} 1).
DiscreteMeasure pi_map(const KernelFamily& fam, const DiscreteMeasure& mu);
std::vector<double> pi_map_raw(const KernelFamily& fam,
                               const std::vector<double>& mu);

// One-step law with restart: on death the chain is reseeded from mu, giving
// the stochastic matrix KK_mu = K_mu + delta_mu (x) mu.
Mat redistribution_matrix(const KernelFamily& fam, const DiscreteMeasure& mu);
Mat redistribution_matrix_raw(const Mat& K, const std::vector<double>& mu);

// Left invariant probability of a stochastic matrix by power iteration
// (independent route used to cross-check pi_map).
DiscreteMeasure invariant_measure(const Mat& M, double tol = 1e-13,
                                  int max_iter = 1000000);

// Damped self-consistency iteration mu <- (1-damping) mu + damping pi(mu).
// A fixed point is exactly a quasi-stationary law of the family.
struct FixedPointReport {
  bool converged = false;
  int iterations = 0;
  double residual_tv = 0.0;  // ||pi(mu) - mu|| at the returned point
  DiscreteMeasure mu;
};
FixedPointReport qsd_fixed_point(const KernelFamily& fam, DiscreteMeasure start,
                                 double damping = 0.5, double tol = 1e-12,
                                 int max_iter = 100000);

// Direct certificate that mu is quasi-stationary:
//   balance_residual = || mu K - (mu K 1) mu ||_1  (the eigen-identity)
//   survival_dev     = max_{n<=nmax} | mu K^n 1 - (mu K 1)^n |
//   survival_rate    = mu K 1 (per-step survival probability at mu)
struct QsdCertificate {
  double balance_residual = 0.0;
  double survival_dev = 0.0;
  double survival_rate = 0.0;
};
QsdCertificate check_qsd_characterization(const KernelFamily& fam,
                                          const DiscreteMeasure& mu,
                                          int nmax = 20);

// Solves (I - KK_mu) g = f - pi(mu)(f) 1 subject to pi(mu)(g) = 0 via the
// rank-one-corrected system (I - KK_mu + 1 (x) pi) g = rhs, which is
// nonsingular and lands on the centered solution automatically.
std::vector<double> poisson_solve(const KernelFamily& fam,
                                  const DiscreteMeasure& mu,
                                  const std::vector<double>& f);
// Independent series evaluation g = sum_{n>=0} (KK_mu^n f - pi(f)).
std::vector<double> poisson_series(const KernelFamily& fam,
                                   const DiscreteMeasure& mu,
                                   const std::vector<double>& f,
                                   double tol = 1e-13, int max_terms = 200000);

// Empirical ell-step minorization over a measure grid: the largest epsilon
// and probability psi with K_mu^ell(i,.) >= epsilon psi(.) for all sampled
// mu and all i. Fails (ok=false) when some column collapses to zero.
struct MinorizationReport {
  bool ok = false;
  double epsilon = 0.0;
  std::vector<double> psi;
};
MinorizationReport check_minorization(const KernelFamily& fam,
                                      const std::vector<DiscreteMeasure>& mu_grid,
                                      int ell);

// One-step envelope c1 psi(j) <= K_mu(i,j) <= c2 psi(j) over the grid; a
// finite sandwich of this form is the workable sufficient condition for the
// ratio-bound hypothesis on products of kernels.
struct EnvelopeReport {
  bool ok = false;
  double c1 = 0.0;
  double c2 = 0.0;
};
EnvelopeReport check_lower_upper(const KernelFamily& fam,
                                 const std::vector<DiscreteMeasure>& mu_grid,
                                 const std::vector<double>& psi);

// Deterministic measure grid: the m corners, the uniform law, and `extra`
// Dirichlet(1,...,1) draws from the given seed.
std::vector<DiscreteMeasure> make_mu_grid(int m, int extra, std::uint64_t seed);

}  // namespace qsd
