#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "qsd/euler.hpp"
#include "qsd/finite_kernel.hpp"
#include "qsd/measure.hpp"

namespace qsd {

// Self-reinforcing killed chain: each step proposes a move through the
// current sub-Markov kernel, falls back to a draw from the occupation
// measure when the move is killed, and then folds the new state into the
// occupation measure with the schedule's next weight.

struct HistogramSpec {
  int bins = 0;  // 0 disables (finite-state runs always bin per state)
  double lo = -1.0, hi = 1.0;  // outside mass lands in the edge bins
};

struct Snapshot {
  std::uint64_t n = 0;  // completed steps
  double gamma = 0.0;   // relative weight of the latest insert
  std::uint64_t kills_cum = 0;
  double mean = 0.0;
  double variance = 0.0;
  double lyapunov = std::numeric_limits<double>::quiet_NaN();  // mu_n(|x|^p)
  std::uint64_t rng_digest = 0;
  std::vector<double> hist;  // normalized; sums to 1 when enabled
};

struct RunConfig {
  StepSchedule schedule = StepSchedule::constant_weight();
  std::uint64_t n_steps = 1000;
  std::uint64_t seed = 1;
  std::uint64_t snapshot_every = 0;  // 0 keeps only the final snapshot
  std::optional<double> lyapunov_p;
  HistogramSpec histogram;
};

struct FiniteRunResult {
  std::vector<Snapshot> snapshots;
  DiscreteMeasure occupation;  // normalized mu_n
  std::uint64_t kills = 0;
  int state = 0;  // X_n
};

struct EulerRunResult {
  std::vector<Snapshot> snapshots;
  WeightedEmpiricalMeasure occupation;
  std::uint64_t kills = 0;
  std::vector<double> state;  // X_n
};

FiniteRunResult run_finite(const KernelFamily& fam, int x0, const RunConfig& cfg);

EulerRunResult run_euler(const EulerModel& model, const std::vector<double>& x0,
                         const RunConfig& cfg);

// Histogram bin for a value under the clamping convention above.
int histogram_bin(const HistogramSpec& spec, double x);

}  // namespace qsd
