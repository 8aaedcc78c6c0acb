#include "qsd/euler.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "qsd/errors.hpp"

namespace qsd {

double MeasureView::convolve1(const std::function<double(double)>& f,
                              double x) const {
  const auto& pts = mu_->flat_points();
  const auto& w = mu_->raw_weights();
  double acc = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) acc += w[k] * f(x - pts[k]);
  return acc / mu_->total();
}

Domain Domain::interval(double a, double b) {
  if (!(a < b)) throw std::invalid_argument("domain: interval needs a < b");
  Domain d;
  d.kind = Kind::interval;
  d.a = a;
  d.b = b;
  return d;
}

Domain Domain::box(std::vector<double> lo, std::vector<double> hi) {
  if (lo.empty() || lo.size() != hi.size())
    throw std::invalid_argument("domain: box bounds mismatch");
  for (std::size_t i = 0; i < lo.size(); ++i)
    if (!(lo[i] < hi[i])) throw std::invalid_argument("domain: box needs lo < hi");
  Domain d;
  d.kind = Kind::box;
  d.lo = std::move(lo);
  d.hi = std::move(hi);
  return d;
}

Domain Domain::ball(std::vector<double> center, double radius) {
  if (center.empty() || !(radius > 0.0))
    throw std::invalid_argument("domain: ball needs a center and radius > 0");
  Domain d;
  d.kind = Kind::ball;
  d.center = std::move(center);
  d.radius = radius;
  return d;
}

Domain Domain::predicate(std::function<bool(const double*, int)> f) {
  if (!f) throw std::invalid_argument("domain: empty predicate");
  Domain d;
  d.kind = Kind::predicate;
  d.pred = std::move(f);
  return d;
}

bool Domain::contains(const double* x, int dim) const {
  switch (kind) {
    case Kind::interval:
      return x[0] > a && x[0] < b;
    case Kind::box:
      for (int i = 0; i < dim; ++i)
        if (!(x[i] > lo[i] && x[i] < hi[i])) return false;
      return true;
    case Kind::ball: {
      double s = 0.0;
      for (int i = 0; i < dim; ++i) {
        const double d = x[i] - center[i];
        s += d * d;
      }
      return s < radius * radius;
    }
    case Kind::predicate:
      return pred(x, dim);
  }
  return false;
}

double sample_stable(double alpha, Rng& rng) {
  if (!(alpha > 0.0 && alpha < 2.0))
    throw std::invalid_argument("sample_stable: alpha must lie in (0,2)");
  // Chambers–Mallows–Stuck, symmetric case.
  const double u = std::numbers::pi * (rng.uniform_open() - 0.5);
  const double w = rng.exponential();
  if (alpha == 1.0) return std::tan(u);
  const double s = std::sin(alpha * u) / std::pow(std::cos(u), 1.0 / alpha);
  const double c = std::cos((1.0 - alpha) * u) / w;
  return s * std::pow(c, (1.0 - alpha) / alpha);
}

double NoiseSpec::draw(Rng& rng) const {
  return kind == Kind::gaussian ? rng.normal() : sample_stable(alpha, rng);
}

double TruncationMap::apply(double x) const {
  if (x >= -R) return x;
  if (x <= -R - 1.0) return -R - 1.0;
  const double t = x + R + 1.0;  // in (0,1)
  return -R + (-t * t * t + 2.0 * t * t - 1.0);
}

double TruncationMap::derivative(double x) const {
  if (x >= -R) return 1.0;
  if (x <= -R - 1.0) return 0.0;
  const double t = x + R + 1.0;
  return t * (4.0 - 3.0 * t);
}

namespace {

void check_model(const EulerModel& model) {
  if (model.dim < 1 || model.dim > kMaxDim)
    throw std::invalid_argument("euler: dimension out of supported range");
  if (!(model.h > 0.0)) throw std::invalid_argument("euler: step size must be positive");
  if (!model.drift) throw std::invalid_argument("euler: drift callback missing");
  if (model.noise.kind == NoiseSpec::Kind::stable &&
      !(model.noise.alpha > 0.0 && model.noise.alpha < 2.0))
    throw std::invalid_argument("euler: stable index must lie in (0,2)");
}

}  // namespace

void deterministic_part(const EulerModel& model, const double* x,
                        const MeasureView& mu, double* out) {
  check_model(model);
  double b[kMaxDim];
  model.drift(x, mu, b);
  for (int i = 0; i < model.dim; ++i) {
    if (!std::isfinite(b[i]))
      throw model_error("euler: drift returned a non-finite value at coordinate " +
                        std::to_string(i));
    out[i] = x[i] + model.h * b[i];
    if (model.truncation) out[i] = model.truncation->apply(out[i]);
  }
}

void propose(const EulerModel& model, const double* x, const MeasureView& mu,
             Rng& rng, double* out) {
  deterministic_part(model, x, mu, out);
  const double scale = model.noise.step_scale(model.h);
  double dz[kMaxDim];
  for (int i = 0; i < model.dim; ++i) dz[i] = scale * model.noise.draw(rng);
  if (!model.diffusion) {
    for (int i = 0; i < model.dim; ++i) out[i] += dz[i];
    return;
  }
  double sigma[kMaxDim * kMaxDim];
  model.diffusion(x, mu, sigma);
  for (int i = 0; i < model.dim; ++i) {
    double acc = 0.0;
    for (int j = 0; j < model.dim; ++j) {
      const double s = sigma[i * model.dim + j];
      if (!std::isfinite(s))
        throw model_error("euler: diffusion returned a non-finite value");
      acc += s * dz[j];
    }
    out[i] += acc;
  }
}

bool kernel_step(const EulerModel& model, const double* x, const MeasureView& mu,
                 Rng& rng, double* y) {
  propose(model, x, mu, rng, y);
  return model.domain.contains(y, model.dim);
}

}  // namespace qsd
