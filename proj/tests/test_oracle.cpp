#include <cmath>
#include <vector>

#include <doctest.h>

#include "qsd/errors.hpp"
#include "qsd/finite_kernel.hpp"
#include "qsd/la.hpp"
#include "qsd/measure.hpp"
#include "qsd/oracle.hpp"
#include "qsd/rng.hpp"

using namespace qsd;

namespace {

Mat zeros(int m) { return Mat(m, m); }

Mat scaled_identity(int m, double c) {
  Mat k(m, m);
  for (int i = 0; i < m; ++i) k(i, i) = c;
  return k;
}

Mat random_substochastic(int m, double target_row_sum, std::uint64_t seed) {
  Rng rng(seed);
  Mat k(m, m);
  for (int i = 0; i < m; ++i) {
    double s = 0.0;
    for (int j = 0; j < m; ++j) {
      k(i, j) = 0.05 + rng.uniform();
      s += k(i, j);
    }
    for (int j = 0; j < m; ++j) k(i, j) *= target_row_sum / s;
  }
  return k;
}

Mat random_stochastic(int m, std::uint64_t seed) {
  return random_substochastic(m, 1.0, seed);
}

double row_sum(const Mat& a, int i) {
  double s = 0.0;
  for (int j = 0; j < a.cols; ++j) s += a(i, j);
  return s;
}

}  // namespace

TEST_CASE("zero kernel has identity resolvent") {
  const Mat a = fundamental_matrix(zeros(3));
  CHECK(max_abs(add_scaled(a, -1.0, Mat::identity(3))) < 1e-14);
}

TEST_CASE("kernel cI has resolvent I/(1-c)") {
  const Mat a = fundamental_matrix(scaled_identity(4, 0.5));
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      CHECK(a(i, j) == doctest::Approx(i == j ? 2.0 : 0.0).epsilon(1e-13));
}

TEST_CASE("resolvent matches the summed power series") {
  for (std::uint64_t seed : {11u, 12u, 13u}) {
    const Mat k = random_substochastic(5, 0.8, seed);
    const Mat direct = fundamental_matrix(k);
    const Mat series = fundamental_series(k);
    CHECK(max_abs(add_scaled(direct, -1.0, series)) < 1e-12);
  }
}

TEST_CASE("resolvent row sums respect the geometric-killing bound") {
  const KernelFamily fam = mean_field_family_uniform(6, 0.85, 1.5);
  const auto grid = make_mu_grid(6, 10, 99);
  const H0Report h0 = check_h0(fam, grid, 5);
  REQUIRE(h0.ok);
  const double bound = static_cast<double>(h0.ell) / (1.0 - h0.rho);
  for (const auto& mu : grid) {
    const Mat a = fundamental_matrix(fam(mu));
    for (int i = 0; i < 6; ++i) CHECK(row_sum(a, i) <= bound + 1e-9);
  }
}

TEST_CASE("conditioned-renewal map fixes every measure when K = cI") {
  const KernelFamily fam = constant_family(scaled_identity(3, 0.3));
  for (const auto& mu : make_mu_grid(3, 5, 7)) {
    const DiscreteMeasure out = pi_map(fam, mu);
    CHECK(out.tv(mu) < 1e-13);
  }
}

TEST_CASE("mapped measure is invariant for the redistribution chain") {
  Mat k(2, 2);
  k(0, 0) = 0.4;
  k(0, 1) = 0.4;
  k(1, 0) = 0.1;
  k(1, 1) = 0.1;
  const KernelFamily fam = constant_family(k);
  for (const auto& mu : make_mu_grid(2, 6, 21)) {
    const DiscreteMeasure pi = pi_map(fam, mu);
    const Mat kk = redistribution_matrix(fam, mu);
    const DiscreteMeasure inv = invariant_measure(kk);
    CHECK(pi.tv(inv) < 1e-12);
    // Direct check of the stationarity identity pi * KK = pi.
    std::vector<double> out = vecmat(pi.p, kk);
    for (int j = 0; j < 2; ++j) CHECK(out[j] == doctest::Approx(pi.p[j]).epsilon(1e-12));
  }
}

TEST_CASE("redistribution kernel: stochastic rows are left alone") {
  const Mat k = random_stochastic(4, 31);
  const KernelFamily fam = constant_family(k);
  const DiscreteMeasure mu = DiscreteMeasure::delta(4, 2);
  const Mat kk = redistribution_matrix(fam, mu);
  CHECK(max_abs(add_scaled(kk, -1.0, k)) < 1e-14);
}

TEST_CASE("redistribution kernel: zero kernel restarts from the measure") {
  const KernelFamily fam = constant_family(zeros(3));
  const DiscreteMeasure mu = DiscreteMeasure::from_weights({1.0, 2.0, 3.0});
  const Mat kk = redistribution_matrix(fam, mu);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      CHECK(kk(i, j) == doctest::Approx(mu.p[j]).epsilon(1e-14));
}

TEST_CASE("redistribution kernel rows always sum to one") {
  const KernelFamily fam = mean_field_family_uniform(5, 0.8, 2.0);
  for (const auto& mu : make_mu_grid(5, 8, 43)) {
    const Mat kk = redistribution_matrix(fam, mu);
    for (int i = 0; i < 5; ++i)
      CHECK(row_sum(kk, i) == doctest::Approx(1.0).epsilon(1e-13));
  }
}

TEST_CASE("fixed point of the self-consistency map is found and certified") {
  const KernelFamily fam = mean_field_family_uniform(5, 0.8, 2.0);
  const FixedPointReport rep = qsd_fixed_point(fam, DiscreteMeasure::uniform(5));
  REQUIRE(rep.converged);
  CHECK(rep.residual_tv < 1e-12);
  const QsdCertificate cert = check_qsd_characterization(fam, rep.mu);
  CHECK(cert.balance_residual < 1e-10);
  CHECK(cert.survival_dev < 1e-10);
  CHECK(cert.survival_rate > 0.0);
  CHECK(cert.survival_rate < 1.0);
}

TEST_CASE("fixed-point iteration stops immediately when already fixed") {
  const KernelFamily fam = constant_family(scaled_identity(4, 0.6));
  const DiscreteMeasure start = DiscreteMeasure::from_weights({4.0, 3.0, 2.0, 1.0});
  const FixedPointReport rep = qsd_fixed_point(fam, start);
  REQUIRE(rep.converged);
  CHECK(rep.mu.tv(start) < 1e-12);
  CHECK(rep.iterations <= 2);
}

TEST_CASE("without interaction the fixed point is the base chain's stationary law") {
  const Mat p = random_stochastic(4, 57);
  const KernelFamily fam = mean_field_family(4, 0.7, 0.0, p);
  const FixedPointReport rep = qsd_fixed_point(fam, DiscreteMeasure::uniform(4));
  REQUIRE(rep.converged);
  const DiscreteMeasure stat = invariant_measure(p);
  CHECK(rep.mu.tv(stat) < 1e-10);
}

TEST_CASE("iteration budget exhaustion is reported, not hidden") {
  const KernelFamily fam = mean_field_family_uniform(5, 0.8, 2.0);
  const FixedPointReport rep =
      qsd_fixed_point(fam, DiscreteMeasure::delta(5, 0), 0.5, 1e-15, 2);
  CHECK_FALSE(rep.converged);
  CHECK(rep.iterations == 2);
  CHECK(rep.residual_tv > 1e-15);
}

TEST_CASE("centered equation: constant data has the zero solution") {
  const KernelFamily fam = mean_field_family_uniform(4, 0.8, 1.0);
  const DiscreteMeasure mu = qsd_fixed_point(fam, DiscreteMeasure::uniform(4)).mu;
  const std::vector<double> f(4, 3.7);
  const std::vector<double> g = poisson_solve(fam, mu, f);
  for (double v : g) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("centered equation: solution satisfies the defining identity") {
  const KernelFamily fam = mean_field_family_uniform(5, 0.8, 2.0);
  const DiscreteMeasure mu = qsd_fixed_point(fam, DiscreteMeasure::uniform(5)).mu;
  const std::vector<double> f = {1.0, -2.0, 0.5, 3.0, -1.0};
  const std::vector<double> g = poisson_solve(fam, mu, f);

  const Mat kk = redistribution_matrix(fam, mu);
  const DiscreteMeasure pi = pi_map(fam, mu);
  double pif = 0.0, pig = 0.0;
  for (int j = 0; j < 5; ++j) {
    pif += pi.p[j] * f[j];
    pig += pi.p[j] * g[j];
  }
  const std::vector<double> kkg = matvec(kk, g);
  for (int i = 0; i < 5; ++i)
    CHECK(g[i] - kkg[i] == doctest::Approx(f[i] - pif).epsilon(1e-10));
  CHECK(std::abs(pig) < 1e-10);
}

TEST_CASE("centered equation: direct solve matches the tail-sum series") {
  const KernelFamily fam = mean_field_family_uniform(4, 0.5, 1.0);
  const DiscreteMeasure mu = qsd_fixed_point(fam, DiscreteMeasure::uniform(4)).mu;
  const std::vector<double> f = {2.0, -1.0, 0.0, 1.5};
  const std::vector<double> direct = poisson_solve(fam, mu, f);
  const std::vector<double> series = poisson_series(fam, mu, f);
  for (int i = 0; i < 4; ++i)
    CHECK(direct[i] == doctest::Approx(series[i]).epsilon(1e-8));
}

TEST_CASE("geometric killing certified for the built-in family") {
  const KernelFamily fam = mean_field_family_uniform(5, 0.9, 2.0);
  const H0Report rep = check_h0(fam, make_mu_grid(5, 10, 3), 5);
  REQUIRE(rep.ok);
  CHECK(rep.ell == 1);
  CHECK(rep.rho <= 0.9 + 1e-12);
}

TEST_CASE("a stochastic kernel never certifies geometric killing") {
  const KernelFamily fam = constant_family(random_stochastic(3, 77));
  const H0Report rep = check_h0(fam, make_mu_grid(3, 5, 4), 4);
  CHECK_FALSE(rep.ok);
}

TEST_CASE("two-step killing is detected at horizon two") {
  Mat k(2, 2);
  k(0, 0) = 0.0;
  k(0, 1) = 1.0;
  k(1, 0) = 0.25;
  k(1, 1) = 0.25;
  const KernelFamily fam = constant_family(k);
  const H0Report rep = check_h0(fam, make_mu_grid(2, 3, 5), 4);
  REQUIRE(rep.ok);
  CHECK(rep.ell == 2);
  CHECK(rep.rho == doctest::Approx(0.5).epsilon(1e-13));
}

TEST_CASE("rank-one kernel gives the obvious small-set split") {
  Mat k(2, 2);
  k(0, 0) = 0.25;
  k(0, 1) = 0.25;
  k(1, 0) = 0.25;
  k(1, 1) = 0.25;
  const KernelFamily fam = constant_family(k);
  const auto grid = make_mu_grid(2, 3, 6);
  const MinorizationReport mrep = check_minorization(fam, grid, 1);
  REQUIRE(mrep.ok);
  CHECK(mrep.epsilon == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(mrep.psi[0] == doctest::Approx(0.5).epsilon(1e-12));

  const EnvelopeReport erep = check_lower_upper(fam, grid, mrep.psi);
  REQUIRE(erep.ok);
  CHECK(erep.c1 == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(erep.c2 == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(erep.c1 <= erep.c2);
}

TEST_CASE("a structural zero breaks the two-sided envelope") {
  Mat k(2, 2);
  k(0, 0) = 0.4;
  k(0, 1) = 0.4;
  k(1, 0) = 0.4;
  k(1, 1) = 0.0;
  const KernelFamily fam = constant_family(k);
  const auto grid = make_mu_grid(2, 3, 8);
  const MinorizationReport mrep = check_minorization(fam, grid, 1);
  REQUIRE(mrep.ok);  // column one is uniformly positive
  const EnvelopeReport erep = check_lower_upper(fam, grid, mrep.psi);
  CHECK_FALSE(erep.ok);
}

TEST_CASE("measure grid contains corners plus uniform plus random draws") {
  const auto grid = make_mu_grid(4, 7, 123);
  CHECK(grid.size() == 4 + 1 + 7);
  for (const auto& mu : grid) {
    CHECK(mu.size() == 4);
    mu.validate();
  }
  CHECK(grid[0].p[0] == 1.0);   // first corner
  CHECK(grid[4].p[0] == 0.25);  // uniform after the corners
}

TEST_CASE("built-in family rejects bad parameters") {
  CHECK_THROWS_AS(mean_field_family_uniform(0, 0.5, 1.0), model_error);
  CHECK_THROWS_AS(mean_field_family_uniform(3, 1.0, 1.0), model_error);
  CHECK_THROWS_AS(mean_field_family_uniform(3, -0.1, 1.0), model_error);
  CHECK_THROWS_AS(mean_field_family_uniform(3, 0.5, -1.0), model_error);
}

TEST_CASE("kill probabilities are one minus the row sums") {
  const KernelFamily fam = mean_field_family_uniform(3, 0.8, 1.0);
  const DiscreteMeasure mu = DiscreteMeasure::uniform(3);
  const Mat k = fam(mu);
  const std::vector<double> kp = kill_probabilities(k);
  for (int i = 0; i < 3; ++i)
    CHECK(kp[i] == doctest::Approx(1.0 - row_sum(k, i)).epsilon(1e-14));
}
