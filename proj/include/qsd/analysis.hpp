#pragma once

#include <vector>

#include "qsd/measure.hpp"

namespace qsd {

// One-dimensional density sampled on an equally spaced grid, normalized so
// that its trapezoid integral over the grid window equals 1.
struct DensityOnGrid {
  std::vector<double> x;
  std::vector<double> f;

  double dx() const;
  double trapezoid() const;
  // Scales f so the trapezoid integral is exactly 1; throws numeric_error
  // when the current mass is not positive.
  void normalize();
  // Cumulative trapezoid integral; same length as the grid, starts at 0.
  std::vector<double> cdf() const;
};

// n equally spaced points covering [a, b] with empty values.
DensityOnGrid make_grid(double a, double b, int n);

// Data-driven bandwidth 1.06 * sigma * n_eff^(-1/5), with the effective
// sample size (sum w)^2 / sum w^2 accounting for unequal weights.
double silverman_bandwidth(const WeightedEmpiricalMeasure& m);

// Gaussian kernel density estimate of the measure's first coordinate on the
// given grid, renormalized over the grid window. bandwidth <= 0 selects the
// Silverman default.
DensityOnGrid kde(const WeightedEmpiricalMeasure& m, double bandwidth,
                  DensityOnGrid grid);

struct DistanceReport {
  double l1 = 0.0;
  double tv = 0.0;
  double w1 = 0.0;
  double ks = 0.0;
};

// Densities on a shared grid: l1 and tv are the trapezoid integral of the
// absolute difference, w1 integrates |CDF difference|, ks is its maximum.
DistanceReport distances(const DensityOnGrid& p, const DensityOnGrid& q);

// Discrete laws on a shared state space with states embedded at 0,1,...:
// tv = l1 = sum of absolute differences (two disjoint point masses are at
// distance 2), w1 sums |CDF difference| with unit spacing, ks is its max.
DistanceReport distances(const DiscreteMeasure& p, const DiscreteMeasure& q);

}  // namespace qsd
