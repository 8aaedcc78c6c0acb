#pragma once

#include <functional>

#include "qsd/la.hpp"
#include "qsd/measure.hpp"

namespace qsd {

// Measure-dependent sub-stochastic kernel family on a finite state space:
// for each probability vector mu, eval(mu) is an m-by-m matrix K_mu with
// nonnegative entries and row sums <= 1. Row i is the law of the next state
// from i on the event of survival; the missing row mass is the one-step
// kill probability delta_mu(i) = 1 - sum_j K_mu(i,j).
struct KernelFamily {
  int m = 0;
  std::function<Mat(const DiscreteMeasure& mu)> eval;

  Mat operator()(const DiscreteMeasure& mu) const { return eval(mu); }
  // Raw-vector overload used by ODE integrators mid-stage, where iterates
  // may sit slightly off the simplex; no validation is applied.
  std::function<Mat(const std::vector<double>& mu_raw)> eval_raw;
};

// Built-in interacting family:
//   K_mu(i,j) = kappa * P(i,j) * exp(-beta * mu_j) / z_i(mu),
//   z_i(mu)   = max(1, sum_j P(i,j) exp(-beta * mu_j)),
// with P row-stochastic, kappa in (0,1), beta >= 0. Mass placed on a state
// is penalized in proportion to the occupation of that state, and the
// normalizer only engages if the tilt would push a row above total mass 1
// (it cannot for beta >= 0, but the clamp keeps the definition safe).
// Row sums are <= kappa < 1, so one step already loses mass uniformly.
KernelFamily mean_field_family(int m, double kappa, double beta, Mat P);

// Same family with the uniform proposal P(i,j) = 1/m.
KernelFamily mean_field_family_uniform(int m, double kappa, double beta);

// Measure-independent family K_mu == K (validated sub-stochastic).
KernelFamily constant_family(Mat K);

// Kill probabilities 1 - row sums of K.
std::vector<double> kill_probabilities(const Mat& K);

}  // namespace qsd
