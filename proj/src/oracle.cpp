#include "qsd/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "qsd/errors.hpp"
#include "qsd/kern/kernels.hpp"
#include "qsd/rng.hpp"

namespace qsd {

namespace {

double max_row_sum(const Mat& K) {
  double worst = 0.0;
  for (int i = 0; i < K.rows; ++i) {
    double s = kern::reduce_add(K.row(i), static_cast<std::size_t>(K.cols));
    worst = std::max(worst, s);
  }
  return worst;
}

Mat eye_minus(const Mat& K) {
  return add_scaled(Mat::identity(K.rows), -1.0, K);
}

}  // namespace

H0Report check_h0(const KernelFamily& fam,
                  const std::vector<DiscreteMeasure>& mu_grid, int ell_max) {
  if (mu_grid.empty()) throw std::invalid_argument("check_h0: empty measure grid");
  H0Report rep;
  // powers[g] holds K_mu^ell for the current ell, advanced jointly.
  std::vector<Mat> kernels;
  kernels.reserve(mu_grid.size());
  for (const auto& mu : mu_grid) kernels.push_back(fam.eval(mu));
  std::vector<Mat> powers = kernels;
  for (int ell = 1; ell <= ell_max; ++ell) {
    double sup = 0.0;
    for (const auto& p : powers) sup = std::max(sup, max_row_sum(p));
    if (sup < 1.0) {
      rep.ok = true;
      rep.ell = ell;
      rep.rho = sup;
      return rep;
    }
    if (ell < ell_max)
      for (std::size_t g = 0; g < powers.size(); ++g)
        powers[g] = matmul(powers[g], kernels[g]);
  }
  rep.ok = false;
  rep.ell = ell_max;
  rep.rho = 1.0;
  return rep;
}

Mat fundamental_matrix(const Mat& K) {
  if (K.rows != K.cols) throw std::invalid_argument("fundamental_matrix: square matrix required");
  return inverse(eye_minus(K));
}

Mat fundamental_series(const Mat& K, double tol, int max_terms) {
  if (K.rows != K.cols) throw std::invalid_argument("fundamental_series: square matrix required");
  Mat sum = Mat::identity(K.rows);
  Mat term = K;
  for (int n = 1; n <= max_terms; ++n) {
    sum = add_scaled(sum, 1.0, term);
    if (max_abs(term) < tol) return sum;
    term = matmul(term, K);
  }
  throw numeric_error("fundamental_series: no convergence within term budget");
}

std::vector<double> pi_map_raw(const KernelFamily& fam,
                               const std::vector<double>& mu) {
  const Mat K = fam.eval_raw(mu);
  // v = mu (I-K)^{-1}  <=>  (I-K)^T v = mu, solved directly for accuracy.
  Lu lu = lu_factor(eye_minus(K));
  std::vector<double> v = lu_solve_transposed(lu, mu);
  double total = kern::reduce_add(v.data(), v.size());
  if (!(total > 0.0) || !std::isfinite(total))
    throw numeric_error("pi_map: expected occupation mass is not positive");
  for (double& x : v) x /= total;
  return v;
}

DiscreteMeasure pi_map(const KernelFamily& fam, const DiscreteMeasure& mu) {
  DiscreteMeasure out;
  out.p = pi_map_raw(fam, mu.p);
  // Solver output can carry tiny negative round-off; clip and renormalize.
  double total = 0.0;
  for (double& x : out.p) {
    if (x < 0.0) x = 0.0;
    total += x;
  }
  for (double& x : out.p) x /= total;
  return out;
}

Mat redistribution_matrix_raw(const Mat& K, const std::vector<double>& mu) {
  if (K.rows != K.cols || static_cast<int>(mu.size()) != K.rows)
    throw std::invalid_argument("redistribution_matrix: dimension mismatch");
  Mat out = K;
  for (int i = 0; i < K.rows; ++i) {
    double death = 1.0 - kern::reduce_add(K.row(i), static_cast<std::size_t>(K.cols));
    if (death < 0.0) death = 0.0;
    for (int j = 0; j < K.cols; ++j) out(i, j) += death * mu[j];
  }
  return out;
}

Mat redistribution_matrix(const KernelFamily& fam, const DiscreteMeasure& mu) {
  return redistribution_matrix_raw(fam.eval(mu), mu.p);
}

DiscreteMeasure invariant_measure(const Mat& M, double tol, int max_iter) {
  if (M.rows != M.cols) throw std::invalid_argument("invariant_measure: square matrix required");
  const int m = M.rows;
  DiscreteMeasure mu = DiscreteMeasure::uniform(m);
  std::vector<double> next(static_cast<std::size_t>(m));
  for (int it = 0; it < max_iter; ++it) {
    vecmat(mu.p, M, next);
    double total = kern::reduce_add(next.data(), next.size());
    for (double& x : next) x /= total;
    double diff = kern::abs_diff_sum(next.data(), mu.p.data(), next.size());
    mu.p.swap(next);
    if (diff < tol) return mu;
  }
  throw numeric_error("invariant_measure: power iteration did not converge");
}

FixedPointReport qsd_fixed_point(const KernelFamily& fam, DiscreteMeasure start,
                                 double damping, double tol, int max_iter) {
  if (!(damping > 0.0 && damping <= 1.0))
    throw std::invalid_argument("qsd_fixed_point: damping must lie in (0,1]");
  FixedPointReport rep;
  rep.mu = std::move(start);
  for (int it = 1; it <= max_iter; ++it) {
    DiscreteMeasure target = pi_map(fam, rep.mu);
    double gap = rep.mu.tv(target);
    kern::axpby(damping, target.p.data(), 1.0 - damping, rep.mu.p.data(),
                rep.mu.p.size());
    // Keep the iterate an exact probability vector against drift.
    double total = kern::reduce_add(rep.mu.p.data(), rep.mu.p.size());
    for (double& x : rep.mu.p) x /= total;
    rep.iterations = it;
    if (gap < tol) {
      rep.converged = true;
      rep.residual_tv = rep.mu.tv(pi_map(fam, rep.mu));
      return rep;
    }
  }
  rep.converged = false;
  rep.residual_tv = rep.mu.tv(pi_map(fam, rep.mu));
  return rep;
}

QsdCertificate check_qsd_characterization(const KernelFamily& fam,
                                          const DiscreteMeasure& mu, int nmax) {
  const Mat K = fam.eval(mu);
  const std::size_t m = mu.p.size();
  QsdCertificate cert;

  std::vector<double> muK(m);
  vecmat(mu.p, K, muK);
  const double rate = kern::reduce_add(muK.data(), muK.size());
  cert.survival_rate = rate;
  double resid = 0.0;
  for (std::size_t j = 0; j < m; ++j) resid += std::abs(muK[j] - rate * mu.p[j]);
  cert.balance_residual = resid;

  // Survival of the killed chain from mu over n steps vs the geometric law.
  std::vector<double> v(m, 1.0), next(m);
  double expect = 1.0;
  for (int n = 1; n <= nmax; ++n) {
    matvec(K, v, next);
    v.swap(next);
    expect *= rate;
    const double surv = kern::dot(mu.p.data(), v.data(), m);
    cert.survival_dev = std::max(cert.survival_dev, std::abs(surv - expect));
  }
  return cert;
}

std::vector<double> poisson_solve(const KernelFamily& fam,
                                  const DiscreteMeasure& mu,
                                  const std::vector<double>& f) {
  const std::size_t m = mu.p.size();
  if (f.size() != m) throw std::invalid_argument("poisson_solve: dimension mismatch");
  const DiscreteMeasure pi = pi_map(fam, mu);
  const Mat KK = redistribution_matrix(fam, mu);

  Mat B = eye_minus(KK);
  for (int i = 0; i < B.rows; ++i)
    for (int j = 0; j < B.cols; ++j) B(i, j) += pi.p[static_cast<std::size_t>(j)];

  const double pif = kern::dot(pi.p.data(), f.data(), m);
  std::vector<double> rhs(m);
  for (std::size_t i = 0; i < m; ++i) rhs[i] = f[i] - pif;

  Lu lu = lu_factor(B);
  return lu_solve(lu, rhs);
}

std::vector<double> poisson_series(const KernelFamily& fam,
                                   const DiscreteMeasure& mu,
                                   const std::vector<double>& f, double tol,
                                   int max_terms) {
  const std::size_t m = mu.p.size();
  if (f.size() != m) throw std::invalid_argument("poisson_series: dimension mismatch");
  const DiscreteMeasure pi = pi_map(fam, mu);
  const Mat KK = redistribution_matrix(fam, mu);
  const double pif = kern::dot(pi.p.data(), f.data(), m);

  std::vector<double> acc(m, 0.0), v = f, next(m);
  for (int n = 0; n < max_terms; ++n) {
    double worst = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double centered = v[i] - pif;
      acc[i] += centered;
      worst = std::max(worst, std::abs(centered));
    }
    if (worst < tol) return acc;
    matvec(KK, v, next);
    v.swap(next);
  }
  throw numeric_error("poisson_series: no convergence within term budget");
}

MinorizationReport check_minorization(const KernelFamily& fam,
                                      const std::vector<DiscreteMeasure>& mu_grid,
                                      int ell) {
  if (mu_grid.empty())
    throw std::invalid_argument("check_minorization: empty measure grid");
  if (ell < 1) throw std::invalid_argument("check_minorization: ell must be >= 1");
  MinorizationReport rep;
  const int m = fam.m;
  std::vector<double> floor_col(static_cast<std::size_t>(m),
                                std::numeric_limits<double>::infinity());
  for (const auto& mu : mu_grid) {
    const Mat K = fam.eval(mu);
    Mat P = K;
    for (int e = 1; e < ell; ++e) P = matmul(P, K);
    for (int j = 0; j < m; ++j) {
      double col_min = std::numeric_limits<double>::infinity();
      for (int i = 0; i < m; ++i) col_min = std::min(col_min, P(i, j));
      floor_col[static_cast<std::size_t>(j)] =
          std::min(floor_col[static_cast<std::size_t>(j)], col_min);
    }
  }
  double eps = kern::reduce_add(floor_col.data(), floor_col.size());
  rep.psi.assign(static_cast<std::size_t>(m), 0.0);
  if (eps > 0.0) {
    rep.ok = true;
    rep.epsilon = eps;
    for (int j = 0; j < m; ++j)
      rep.psi[static_cast<std::size_t>(j)] = floor_col[static_cast<std::size_t>(j)] / eps;
  }
  return rep;
}

EnvelopeReport check_lower_upper(const KernelFamily& fam,
                                 const std::vector<DiscreteMeasure>& mu_grid,
                                 const std::vector<double>& psi) {
  if (mu_grid.empty())
    throw std::invalid_argument("check_lower_upper: empty measure grid");
  if (static_cast<int>(psi.size()) != fam.m)
    throw std::invalid_argument("check_lower_upper: psi dimension mismatch");
  EnvelopeReport rep;
  double c1 = std::numeric_limits<double>::infinity();
  double c2 = 0.0;
  for (const auto& mu : mu_grid) {
    const Mat K = fam.eval(mu);
    for (int i = 0; i < K.rows; ++i)
      for (int j = 0; j < K.cols; ++j) {
        const double p = psi[static_cast<std::size_t>(j)];
        const double k = K(i, j);
        if (p <= 0.0) {
          if (k > 0.0) return rep;  // mass outside the envelope support
          continue;
        }
        c1 = std::min(c1, k / p);
        c2 = std::max(c2, k / p);
      }
  }
  if (!std::isfinite(c1)) return rep;
  rep.ok = true;
  rep.c1 = c1;
  rep.c2 = c2;
  return rep;
}

std::vector<DiscreteMeasure> make_mu_grid(int m, int extra, std::uint64_t seed) {
  if (m < 1) throw std::invalid_argument("make_mu_grid: m must be >= 1");
  std::vector<DiscreteMeasure> grid;
  grid.reserve(static_cast<std::size_t>(m + 1 + extra));
  for (int i = 0; i < m; ++i) grid.push_back(DiscreteMeasure::delta(m, i));
  grid.push_back(DiscreteMeasure::uniform(m));
  Rng rng(seed);
  for (int k = 0; k < extra; ++k) {
    std::vector<double> w(static_cast<std::size_t>(m));
    for (double& x : w) x = rng.exponential();
    grid.push_back(DiscreteMeasure::from_weights(w));
  }
  return grid;
}

}  // namespace qsd
