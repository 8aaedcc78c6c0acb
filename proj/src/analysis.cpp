#include "qsd/analysis.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "qsd/errors.hpp"
#include "qsd/kern/kernels.hpp"

namespace qsd {

double DensityOnGrid::dx() const {
  if (x.size() < 2) throw std::invalid_argument("density grid needs >= 2 points");
  return (x.back() - x.front()) / static_cast<double>(x.size() - 1);
}

double DensityOnGrid::trapezoid() const {
  const double h = dx();
  if (f.size() != x.size()) throw std::invalid_argument("density values/grid mismatch");
  double s = kern::reduce_add(f.data(), f.size());
  s -= 0.5 * (f.front() + f.back());
  return s * h;
}

void DensityOnGrid::normalize() {
  const double mass = trapezoid();
  if (!(mass > 0.0) || !std::isfinite(mass))
    throw numeric_error("density normalize: nonpositive mass");
  for (double& v : f) v /= mass;
}

std::vector<double> DensityOnGrid::cdf() const {
  const double h = dx();
  std::vector<double> c(x.size(), 0.0);
  for (std::size_t i = 1; i < x.size(); ++i)
    c[i] = c[i - 1] + 0.5 * h * (f[i - 1] + f[i]);
  return c;
}

DensityOnGrid make_grid(double a, double b, int n) {
  if (!(a < b) || n < 2) throw std::invalid_argument("make_grid: need a < b and n >= 2");
  DensityOnGrid g;
  g.x.resize(static_cast<std::size_t>(n));
  const double h = (b - a) / static_cast<double>(n - 1);
  for (int i = 0; i < n; ++i) g.x[static_cast<std::size_t>(i)] = a + h * i;
  g.x.back() = b;
  g.f.assign(g.x.size(), 0.0);
  return g;
}

double silverman_bandwidth(const WeightedEmpiricalMeasure& m) {
  if (m.empty()) throw std::invalid_argument("silverman_bandwidth: empty measure");
  const auto& w = m.raw_weights();
  const double s1 = kern::reduce_add(w.data(), w.size());
  const double s2 = kern::dot(w.data(), w.data(), w.size());
  const double n_eff = s1 * s1 / s2;
  const double var = m.variance(0);
  // A spread at the level of accumulated rounding is no spread at all; the
  // caller must then pick a width explicitly.
  if (!(var > (1.0 + std::abs(m.moment2(0))) * 1e-12)) return 0.0;
  return 1.06 * std::sqrt(var) * std::pow(n_eff, -0.2);
}

DensityOnGrid kde(const WeightedEmpiricalMeasure& m, double bandwidth,
                  DensityOnGrid grid) {
  if (m.empty()) throw std::invalid_argument("kde: empty measure");
  if (grid.x.size() < 2) throw std::invalid_argument("kde: grid needs >= 2 points");
  double bw = bandwidth > 0.0 ? bandwidth : silverman_bandwidth(m);
  if (!(bw > 0.0) || !std::isfinite(bw))
    throw std::invalid_argument("kde: bandwidth must be positive (degenerate sample needs an explicit one)");

  grid.f.assign(grid.x.size(), 0.0);
  if (m.dim() == 1) {
    kern::kde_accumulate(m.flat_points().data(), m.raw_weights().data(), m.size(),
                         1.0 / bw, grid.x.data(), grid.x.size(), grid.f.data());
  } else {
    // First coordinate only; strided gather then the same accumulation.
    std::vector<double> c(m.size());
    for (std::size_t k = 0; k < m.size(); ++k) c[k] = m.point(k)[0];
    kern::kde_accumulate(c.data(), m.raw_weights().data(), m.size(), 1.0 / bw,
                         grid.x.data(), grid.x.size(), grid.f.data());
  }
  const double z = m.total() * bw * std::sqrt(2.0 * std::numbers::pi);
  for (double& v : grid.f) v /= z;
  grid.normalize();
  return grid;
}

namespace {

void require_same_grid(const DensityOnGrid& p, const DensityOnGrid& q) {
  if (p.x.size() != q.x.size())
    throw std::invalid_argument("distances: grids differ in size");
  for (std::size_t i = 0; i < p.x.size(); ++i)
    if (std::abs(p.x[i] - q.x[i]) > 1e-12)
      throw std::invalid_argument("distances: grids differ");
}

}  // namespace

DistanceReport distances(const DensityOnGrid& p, const DensityOnGrid& q) {
  require_same_grid(p, q);
  const double h = p.dx();
  DistanceReport r;

  double l1 = 0.0;
  for (std::size_t i = 0; i < p.f.size(); ++i) {
    const double d = std::abs(p.f[i] - q.f[i]);
    l1 += (i == 0 || i + 1 == p.f.size()) ? 0.5 * d : d;
  }
  r.l1 = l1 * h;
  r.tv = r.l1;

  const std::vector<double> cp = p.cdf();
  const std::vector<double> cq = q.cdf();
  double w1 = 0.0, ks = 0.0;
  for (std::size_t i = 0; i < cp.size(); ++i) {
    const double d = std::abs(cp[i] - cq[i]);
    ks = std::max(ks, d);
    w1 += (i == 0 || i + 1 == cp.size()) ? 0.5 * d : d;
  }
  r.w1 = w1 * h;
  r.ks = ks;
  return r;
}

DistanceReport distances(const DiscreteMeasure& p, const DiscreteMeasure& q) {
  if (p.size() != q.size())
    throw std::invalid_argument("distances: state spaces differ");
  DistanceReport r;
  r.tv = kern::abs_diff_sum(p.p.data(), q.p.data(), p.p.size());
  r.l1 = r.tv;
  double cum = 0.0, w1 = 0.0, ks = 0.0;
  for (int i = 0; i < p.size(); ++i) {
    cum += p.p[static_cast<std::size_t>(i)] - q.p[static_cast<std::size_t>(i)];
    const double d = std::abs(cum);
    w1 += d;  // unit spacing between neighboring states
    ks = std::max(ks, d);
  }
  r.w1 = w1;
  r.ks = ks;
  return r;
}

}  // namespace qsd
