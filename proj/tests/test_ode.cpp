#include <cmath>
#include <vector>

#include <doctest.h>

#include "qsd/errors.hpp"
#include "qsd/finite_kernel.hpp"
#include "qsd/la.hpp"
#include "qsd/measure.hpp"
#include "qsd/measure_ode.hpp"
#include "qsd/oracle.hpp"

using namespace qsd;

namespace {

Mat scaled_identity(int m, double c) {
  Mat k(m, m);
  for (int i = 0; i < m; ++i) k(i, i) = c;
  return k;
}

double tv_to(const std::vector<double>& a, const DiscreteMeasure& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b.p[i]);
  return s;
}

}  // namespace

TEST_CASE("the flow is stationary at the self-consistent measure") {
  const KernelFamily fam = mean_field_family_uniform(5, 0.8, 2.0);
  const FixedPointReport fp = qsd_fixed_point(fam, DiscreteMeasure::uniform(5));
  REQUIRE(fp.converged);
  CHECK(qsd_ode_residual(fam, fp.mu.p) < 1e-12);

  OdeOptions opts;
  opts.store_every = 10;
  const OdePath path = integrate_qsd_ode(fam, fp.mu, 10.0, opts);
  double worst = 0.0;
  for (const auto& v : path.values) worst = std::max(worst, tv_to(v, fp.mu));
  CHECK(worst < 1e-8);
}

TEST_CASE("kernel cI freezes the flow at any start") {
  const KernelFamily fam = constant_family(scaled_identity(3, 0.5));
  const DiscreteMeasure start = DiscreteMeasure::from_weights({1.0, 2.0, 3.0});
  OdeOptions opts;
  opts.store_every = 100;
  const OdePath path = integrate_qsd_ode(fam, start, 5.0, opts);
  for (const auto& v : path.values) CHECK(tv_to(v, start) < 1e-10);
}

TEST_CASE("path bookkeeping: nodes are increasing probability vectors") {
  const KernelFamily fam = mean_field_family_uniform(4, 0.7, 1.0);
  OdeOptions opts;
  opts.dt = 1e-2;
  opts.store_every = 7;
  const OdePath path = integrate_qsd_ode(fam, DiscreteMeasure::delta(4, 0), 3.0, opts);
  REQUIRE(path.times.size() == path.values.size());
  CHECK(path.times.front() == 0.0);
  CHECK(path.times.back() == doctest::Approx(3.0).epsilon(1e-12));
  for (std::size_t i = 1; i < path.times.size(); ++i)
    CHECK(path.times[i] > path.times[i - 1]);
  for (const auto& v : path.values) {
    double s = 0.0;
    for (double x : v) {
      CHECK(x >= 0.0);
      s += x;
    }
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("long-run limit of the flow is the fixed point") {
  const KernelFamily fam = mean_field_family_uniform(5, 0.8, 2.0);
  const FixedPointReport fp = qsd_fixed_point(fam, DiscreteMeasure::uniform(5));
  REQUIRE(fp.converged);
  OdeOptions opts;
  opts.store_every = 1000;
  const OdePath path = integrate_qsd_ode(fam, DiscreteMeasure::delta(5, 2), 50.0, opts);
  CHECK(tv_to(path.values.back(), fp.mu) < 1e-6);
  CHECK(qsd_ode_residual(fam, path.values.back()) < 1e-6);
}

TEST_CASE("normalized and mass-form integrations agree after time change") {
  const KernelFamily fam = mean_field_family_uniform(4, 0.8, 1.5);
  const DiscreteMeasure start = DiscreteMeasure::delta(4, 1);
  const double dev = check_time_change_equivalence(fam, start, 2.0, 1e-3);
  CHECK(dev < 1e-6);
}

TEST_CASE("time-change deviation shrinks at fourth order in the step") {
  const KernelFamily fam = mean_field_family_uniform(4, 0.8, 1.5);
  const DiscreteMeasure start = DiscreteMeasure::delta(4, 1);
  const double coarse = check_time_change_equivalence(fam, start, 2.0, 0.04);
  const double fine = check_time_change_equivalence(fam, start, 2.0, 0.02);
  CHECK(fine < coarse);
  CHECK(coarse / fine >= 8.0);  // at least third order between halvings
}

TEST_CASE("internal clock runs no faster than the rescaled one") {
  const KernelFamily fam = mean_field_family_uniform(5, 0.8, 2.0);
  const auto grid_rep = check_h0(fam, make_mu_grid(5, 5, 17), 3);
  REQUIRE(grid_rep.ok);
  const double c = static_cast<double>(grid_rep.ell) / (1.0 - grid_rep.rho);

  OdeOptions opts;
  opts.dt = 1e-3;
  opts.store_every = 20;
  const OdePath path = integrate_linearized(fam, DiscreteMeasure::uniform(5), 3.0, opts);
  REQUIRE(path.tau.size() == path.times.size());
  CHECK(path.tau.front() == 0.0);
  for (std::size_t i = 1; i < path.times.size(); ++i) {
    const double slope = (path.tau[i] - path.tau[i - 1]) / (path.times[i] - path.times[i - 1]);
    CHECK(slope <= 1.0 + 1e-9);
    CHECK(slope >= 1.0 / c - 1e-9);
  }
}

TEST_CASE("propagator series: zero horizon and zero kernel are exact") {
  const KernelFamily trivial = constant_family(Mat(3, 3));
  const DiscreteMeasure mu = DiscreteMeasure::from_weights({1.0, 1.0, 2.0});
  CHECK(propagator_series_check(trivial, mu, 0.0, 5) < 1e-14);
  // With no reentry the generator is the identity and the series is e^t mu.
  CHECK(propagator_series_check(trivial, mu, 1.0, 30, 1e-4) < 1e-10);
}

TEST_CASE("propagator series matches step integration for the built-in family") {
  const KernelFamily fam = mean_field_family_uniform(4, 0.5, 1.0);
  const DiscreteMeasure mu = DiscreteMeasure::uniform(4);
  CHECK(propagator_series_check(fam, mu, 2.0, 40, 1e-4) < 1e-8);
}

TEST_CASE("integration options are validated") {
  const KernelFamily fam = mean_field_family_uniform(3, 0.5, 1.0);
  const DiscreteMeasure start = DiscreteMeasure::uniform(3);
  OdeOptions bad_dt;
  bad_dt.dt = 0.0;
  CHECK_THROWS_AS(integrate_qsd_ode(fam, start, 1.0, bad_dt), std::invalid_argument);
  OdeOptions bad_stride;
  bad_stride.store_every = 0;
  CHECK_THROWS_AS(integrate_qsd_ode(fam, start, 1.0, bad_stride), std::invalid_argument);
  CHECK_THROWS_AS(integrate_qsd_ode(fam, start, -1.0, OdeOptions{}), std::invalid_argument);
}
