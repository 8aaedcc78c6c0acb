#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "qsd/measure.hpp"
#include "qsd/rng.hpp"

namespace qsd {

// Discrete-time killed diffusion steps: a drift-plus-noise candidate is
// proposed and the move survives only if it lands inside the open domain.
// The drift may depend on the running occupation measure, exposed to model
// callbacks through the read-only functional view below.

// Cheap wrapper handed to drift/diffusion callbacks. The weighted mean is
// maintained incrementally by the underlying measure, so mean-field drifts
// of the form b(x, mu) = g(mean of mu) cost O(1) per step.
class MeasureView {
 public:
  explicit MeasureView(const WeightedEmpiricalMeasure& mu) : mu_(&mu) {}
  double mean(int coord = 0) const { return mu_->mean(coord); }
  double variance(int coord = 0) const { return mu_->variance(coord); }
  double moment_abs(double p, int coord = 0) const {
    return mu_->abs_pow_moment(p, coord);
  }
  // Weighted average of f(x - y) over measure points y (one-dimensional).
  double convolve1(const std::function<double(double)>& f, double x) const;
  const WeightedEmpiricalMeasure& measure() const { return *mu_; }

 private:
  const WeightedEmpiricalMeasure* mu_;
};

struct Domain {
  enum class Kind { interval, box, ball, predicate };
  Kind kind = Kind::interval;
  double a = -1.0, b = 1.0;            // interval (a, b)
  std::vector<double> lo, hi;          // open box
  std::vector<double> center;          // open ball
  double radius = 1.0;
  std::function<bool(const double*, int)> pred;

  static Domain interval(double a, double b);
  static Domain box(std::vector<double> lo, std::vector<double> hi);
  static Domain ball(std::vector<double> center, double radius);
  static Domain predicate(std::function<bool(const double*, int)> f);

  // Membership in the open set; boundary points count as outside.
  bool contains(const double* x, int dim) const;
};

struct NoiseSpec {
  enum class Kind { gaussian, stable };
  Kind kind = Kind::gaussian;
  double alpha = 1.5;  // stable index, required in (0,2)

  // Per-coordinate increment scale for one step of length h.
  double step_scale(double h) const {
    return kind == Kind::gaussian ? std::sqrt(h) : std::pow(h, 1.0 / alpha);
  }
  // One standard (unit-scale) variate.
  double draw(Rng& rng) const;
};

// Standard symmetric alpha-stable variate (Chambers–Mallows–Stuck).
double sample_stable(double alpha, Rng& rng);

// Clamp map used on unbounded domains: identity above -R, constant -R-1
// below -R-1, and a C^1 monotone cubic blend in between.
struct TruncationMap {
  double R = 1.0;
  double apply(double x) const;
  double derivative(double x) const;
};

struct EulerModel {
  int dim = 1;
  double h = 0.01;
  // out receives dim entries. Required.
  std::function<void(const double* x, const MeasureView&, double* out)> drift;
  // out receives a dim x dim row-major matrix; empty means identity.
  std::function<void(const double* x, const MeasureView&, double* out)> diffusion;
  Domain domain;
  NoiseSpec noise;
  std::optional<TruncationMap> truncation;  // set => clamped scheme
};

// Maximum spatial dimension supported by the fixed step buffers.
inline constexpr int kMaxDim = 16;

// Drift part of the proposal: x + h b(x, mu), clamped when configured.
// Writes dim entries to out; throws model_error on non-finite drift.
void deterministic_part(const EulerModel& model, const double* x,
                        const MeasureView& mu, double* out);

// Full candidate: deterministic part plus sigma(x, mu) times the scaled
// noise increment.
void propose(const EulerModel& model, const double* x, const MeasureView& mu,
             Rng& rng, double* out);

// One killed step: true (alive) with the surviving candidate in y, or
// false (killed) with y unspecified. Rebirth is the caller's job.
bool kernel_step(const EulerModel& model, const double* x, const MeasureView& mu,
                 Rng& rng, double* y);

}  // namespace qsd
