#include "qsd/benchmark.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace qsd {

namespace {

constexpr double kPi = std::numbers::pi;

double profile(double b, double x) {
  return std::exp(b * x) * std::cos(0.5 * kPi * x);
}

// Composite Simpson over [-1,1]; the integrand is entire, so this hits
// ~1e-12 relative accuracy at this resolution for all relevant tilts.
double profile_mass(double b) {
  constexpr int kIntervals = 20000;  // even
  const double h = 2.0 / kIntervals;
  double odd = 0.0, even = 0.0;
  for (int i = 1; i < kIntervals; i += 2) odd += profile(b, -1.0 + i * h);
  for (int i = 2; i < kIntervals; i += 2) even += profile(b, -1.0 + i * h);
  return (profile(b, -1.0) + profile(b, 1.0) + 4.0 * odd + 2.0 * even) * h / 3.0;
}

}  // namespace

DensityOnGrid pi_b_density(double b, DensityOnGrid grid) {
  if (grid.x.size() < 2) throw std::invalid_argument("pi_b_density: grid needs >= 2 points");
  if (grid.x.front() < -1.0 - 1e-12 || grid.x.back() > 1.0 + 1e-12)
    throw std::invalid_argument("pi_b_density: grid must lie within [-1,1]");
  const double z = profile_mass(b);
  grid.f.resize(grid.x.size());
  for (std::size_t i = 0; i < grid.x.size(); ++i) {
    const double x = std::clamp(grid.x[i], -1.0, 1.0);
    grid.f[i] = profile(b, x) / z;
  }
  // Exact unit mass on the grid window (the quadrature constant already
  // puts the trapezoid within grid resolution of 1).
  grid.normalize();
  return grid;
}

double tilted_cosine_mean(double c) {
  return std::tanh(c) - 8.0 * c / (4.0 * c * c + kPi * kPi);
}

double drift_consistency_gap(double gamma, double b) {
  return tilted_cosine_mean(gamma * b) - b;
}

std::vector<double> b_fixed_points(double gamma) {
  if (!(gamma > 0.0)) throw std::invalid_argument("b_fixed_points: gamma must be positive");
  constexpr double kBracket = 50.0;
  constexpr int kCells = 100000;

  // G is odd, so scan [0, B] and mirror. Exact zeros at cell nodes are
  // recorded directly (0 itself is one), sign flips are bisected.
  auto g = [gamma](double b) { return drift_consistency_gap(gamma, b); };
  std::vector<double> pos;
  const double step = kBracket / kCells;
  double prev_x = 0.0, prev_g = g(0.0);
  for (int i = 1; i <= kCells; ++i) {
    const double x = step * i;
    const double gi = g(x);
    if (gi == 0.0) {
      pos.push_back(x);
    } else if (prev_g != 0.0 && std::signbit(gi) != std::signbit(prev_g)) {
      double lo = prev_x, hi = x;
      double glo = prev_g;
      while (hi - lo > 1e-12) {
        const double mid = 0.5 * (lo + hi);
        const double gm = g(mid);
        if (gm == 0.0) {
          lo = hi = mid;
          break;
        }
        if (std::signbit(gm) == std::signbit(glo)) {
          lo = mid;
          glo = gm;
        } else {
          hi = mid;
        }
      }
      pos.push_back(0.5 * (lo + hi));
    }
    prev_x = x;
    prev_g = gi;
  }

  // Merge near-duplicates, drop anything indistinguishable from 0.
  std::sort(pos.begin(), pos.end());
  std::vector<double> roots;
  for (double r : pos) {
    if (r <= 1e-9) continue;
    if (!roots.empty() && r - roots.back() <= 1e-9) continue;
    roots.push_back(r);
  }

  std::vector<double> out;
  out.reserve(2 * roots.size() + 1);
  for (auto it = roots.rbegin(); it != roots.rend(); ++it) out.push_back(-*it);
  out.push_back(0.0);
  for (double r : roots) out.push_back(r);
  return out;
}

double uniqueness_bound_gamma() { return kPi * kPi / (kPi * kPi + 8.0); }

double root_birth_gamma() { return kPi * kPi / (kPi * kPi - 8.0); }

EulerModel benchmark_model(double gamma, double h) {
  if (!(gamma >= 0.0)) throw std::invalid_argument("benchmark_model: gamma must be >= 0");
  EulerModel model;
  model.dim = 1;
  model.h = h;
  model.drift = [gamma](const double*, const MeasureView& mu, double* out) {
    out[0] = gamma * mu.mean(0);
  };
  model.domain = Domain::interval(-1.0, 1.0);
  model.noise.kind = NoiseSpec::Kind::gaussian;
  return model;
}

double pi0_inverse_cdf(double u) {
  if (!(u > 0.0 && u < 1.0)) throw std::invalid_argument("pi0_inverse_cdf: u must lie in (0,1)");
  return (2.0 / kPi) * std::asin(2.0 * u - 1.0);
}

}  // namespace qsd
