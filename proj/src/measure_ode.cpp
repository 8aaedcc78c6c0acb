#include "qsd/measure_ode.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>

#include "qsd/errors.hpp"
#include "qsd/kern/kernels.hpp"
#include "qsd/la.hpp"
#include "qsd/oracle.hpp"

namespace qsd {

namespace {

using Field = std::function<void(const std::vector<double>&, std::vector<double>&)>;

// Classic fourth-order step with preallocated stage buffers.
struct Rk4 {
  std::vector<double> k1, k2, k3, k4, tmp;

  void step(const Field& f, std::vector<double>& y, double h) {
    const std::size_t n = y.size();
    f(y, k1);
    tmp.resize(n);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
    f(tmp, k2);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
    f(tmp, k3);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * k3[i];
    f(tmp, k4);
    const double w = h / 6.0;
    for (std::size_t i = 0; i < n; ++i)
      y[i] += w * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
};

// The vector field is tangent to the simplex, so any mass drift is pure
// integration error; a drift beyond tol means the step size is too large.
void project_simplex(double* p, std::size_t m, double tol) {
  double total = kern::reduce_add(p, m);
  if (!(std::abs(total - 1.0) <= tol))
    throw numeric_error("ode: mass drift exceeds tolerance; reduce the step size");
  double clipped = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    if (p[i] < 0.0) p[i] = 0.0;
    clipped += p[i];
  }
  for (std::size_t i = 0; i < m; ++i) p[i] /= clipped;
}

void check_opts(double T, const OdeOptions& opts) {
  if (!(T >= 0.0)) throw std::invalid_argument("ode: negative horizon");
  if (!(opts.dt > 0.0)) throw std::invalid_argument("ode: step size must be positive");
  if (opts.store_every < 1) throw std::invalid_argument("ode: store_every must be >= 1");
}

}  // namespace

double qsd_ode_residual(const KernelFamily& fam, const std::vector<double>& nu) {
  const std::vector<double> pi = pi_map_raw(fam, nu);
  return kern::abs_diff_sum(pi.data(), nu.data(), nu.size());
}

OdePath integrate_qsd_ode(const KernelFamily& fam, const DiscreteMeasure& nu0,
                          double T, const OdeOptions& opts) {
  nu0.validate();
  check_opts(T, opts);

  Field field = [&fam](const std::vector<double>& y, std::vector<double>& out) {
    out = pi_map_raw(fam, y);
    for (std::size_t i = 0; i < y.size(); ++i) out[i] -= y[i];
  };

  OdePath path;
  std::vector<double> y = nu0.p;
  path.times.push_back(0.0);
  path.values.push_back(y);
  if (T == 0.0) return path;

  const long n = std::max(1L, std::lround(std::ceil(T / opts.dt - 1e-12)));
  const double h = T / static_cast<double>(n);
  Rk4 rk;
  for (long i = 1; i <= n; ++i) {
    rk.step(field, y, h);
    project_simplex(y.data(), y.size(), opts.mass_tol);
    if (i % opts.store_every == 0 || i == n) {
      path.times.push_back(h * static_cast<double>(i));
      path.values.push_back(y);
    }
  }
  return path;
}

OdePath integrate_linearized(const KernelFamily& fam, const DiscreteMeasure& mu0,
                             double T, const OdeOptions& opts) {
  mu0.validate();
  check_opts(T, opts);
  const std::size_t m = mu0.p.size();

  // State is (mu, t): mu runs in its own clock s, t accumulates the mapped
  // time with rate mu A_mu 1 >= 1, so the loop ends within T/dt steps.
  Field field = [&fam, m](const std::vector<double>& y, std::vector<double>& out) {
    const std::vector<double> mu(y.begin(), y.begin() + static_cast<long>(m));
    const Mat K = fam.eval_raw(mu);
    const Lu lu = lu_factor(add_scaled(Mat::identity(K.rows), -1.0, K));
    const std::vector<double> v = lu_solve_transposed(lu, mu);
    const double mass = kern::reduce_add(v.data(), v.size());
    out.resize(m + 1);
    for (std::size_t i = 0; i < m; ++i) out[i] = v[i] - mass * mu[i];
    out[m] = mass;
  };

  OdePath path;
  std::vector<double> y = mu0.p;
  y.push_back(0.0);
  path.times.push_back(0.0);
  path.tau.push_back(0.0);
  path.values.push_back(mu0.p);
  if (T == 0.0) return path;

  Rk4 rk;
  long i = 0;
  while (y[m] < T) {
    ++i;
    rk.step(field, y, opts.dt);
    project_simplex(y.data(), m, opts.mass_tol);
    if (i % opts.store_every == 0 || y[m] >= T) {
      path.times.push_back(y[m]);
      path.tau.push_back(opts.dt * static_cast<double>(i));
      path.values.emplace_back(y.begin(), y.begin() + static_cast<long>(m));
    }
  }
  return path;
}

double check_time_change_equivalence(const KernelFamily& fam,
                                     const DiscreteMeasure& nu0, double T,
                                     double dt) {
  OdeOptions opts;
  opts.dt = dt;
  const OdePath lin = integrate_linearized(fam, nu0, T, opts);

  Field field = [&fam](const std::vector<double>& y, std::vector<double>& out) {
    out = pi_map_raw(fam, y);
    for (std::size_t i = 0; i < y.size(); ++i) out[i] -= y[i];
  };

  // The normalized flow is stepped on exactly the node times produced by
  // the clock map, so deviations are pure integration error on both sides.
  std::vector<double> y = nu0.p;
  Rk4 rk;
  double dev = 0.0;
  for (std::size_t i = 1; i < lin.times.size(); ++i) {
    const double h = lin.times[i] - lin.times[i - 1];
    rk.step(field, y, h);
    project_simplex(y.data(), y.size(), 1e-6);
    dev = std::max(dev, kern::abs_diff_sum(y.data(), lin.values[i].data(), y.size()));
  }
  return dev;
}

double propagator_series_check(const KernelFamily& fam, const DiscreteMeasure& mu,
                               double t, int N, double dt) {
  mu.validate();
  if (!(t >= 0.0)) throw std::invalid_argument("propagator_series_check: negative time");
  if (N < 0 || !(dt > 0.0))
    throw std::invalid_argument("propagator_series_check: bad parameters");
  const Mat A = fundamental_matrix(fam.eval(mu));

  // Truncated exponential series, accumulating (t A)^k / k! term by term.
  Mat series = Mat::identity(A.rows);
  Mat term = Mat::identity(A.rows);
  for (int k = 1; k <= N; ++k) {
    term = matmul(term, A);
    const double s = t / static_cast<double>(k);
    for (double& x : term.a) x *= s;
    series = add_scaled(series, 1.0, term);
  }

  // Independent route: RK4 for Phi' = Phi A from the identity.
  Mat phi = Mat::identity(A.rows);
  if (t > 0.0) {
    const long n = std::max(1L, std::lround(std::ceil(t / dt - 1e-12)));
    const double h = t / static_cast<double>(n);
    for (long i = 0; i < n; ++i) {
      const Mat K1 = matmul(phi, A);
      const Mat K2 = matmul(add_scaled(phi, 0.5 * h, K1), A);
      const Mat K3 = matmul(add_scaled(phi, 0.5 * h, K2), A);
      const Mat K4 = matmul(add_scaled(phi, h, K3), A);
      phi = add_scaled(phi, h / 6.0, K1);
      phi = add_scaled(phi, h / 3.0, K2);
      phi = add_scaled(phi, h / 3.0, K3);
      phi = add_scaled(phi, h / 6.0, K4);
    }
  }
  return max_abs(add_scaled(series, -1.0, phi));
}

}  // namespace qsd
