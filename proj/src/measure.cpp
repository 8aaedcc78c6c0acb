#include "qsd/measure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qsd/errors.hpp"
#include "qsd/kern/kernels.hpp"

namespace qsd {

DiscreteMeasure::DiscreteMeasure(std::vector<double> probs) : p(std::move(probs)) {
  validate();
}

DiscreteMeasure DiscreteMeasure::uniform(int m) {
  DiscreteMeasure d;
  d.p.assign(m, 1.0 / m);
  return d;
}

DiscreteMeasure DiscreteMeasure::delta(int m, int i) {
  if (i < 0 || i >= m) throw std::invalid_argument("delta: state out of range");
  DiscreteMeasure d;
  d.p.assign(m, 0.0);
  d.p[i] = 1.0;
  return d;
}

DiscreteMeasure DiscreteMeasure::from_weights(const std::vector<double>& w) {
  double s = 0.0;
  for (const double v : w) {
    if (!(v >= 0.0)) throw std::invalid_argument("from_weights: negative weight");
    s += v;
  }
  if (!(s > 0.0)) throw std::invalid_argument("from_weights: zero total mass");
  DiscreteMeasure d;
  d.p.resize(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) d.p[i] = w[i] / s;
  return d;
}

void DiscreteMeasure::validate(double tol) const {
  if (p.empty()) throw std::invalid_argument("measure: empty");
  double s = 0.0;
  for (const double v : p) {
    if (!(v >= -tol) || !std::isfinite(v))
      throw std::invalid_argument("measure: negative or non-finite entry");
    s += v;
  }
  if (std::fabs(s - 1.0) > tol)
    throw std::invalid_argument("measure: mass differs from 1 beyond tolerance");
}

double DiscreteMeasure::tv(const DiscreteMeasure& q) const {
  if (q.size() != size()) throw std::invalid_argument("tv: size mismatch");
  return kern::abs_diff_sum(p.data(), q.p.data(), p.size());
}

double DiscreteMeasure::mean_position() const {
  double s = 0.0;
  for (int i = 0; i < size(); ++i) s += p[i] * i;
  return s;
}

StepSchedule StepSchedule::polynomial(double alpha) {
  if (!(alpha > -1.0))
    throw std::invalid_argument("schedule: polynomial exponent must be > -1");
  return StepSchedule(Kind::polynomial, alpha);
}

StepSchedule StepSchedule::constant_weight() {
  return StepSchedule(Kind::constant_weight, 0.0);
}

double StepSchedule::eta(std::uint64_t n) const {
  if (n == 0) throw std::invalid_argument("schedule: index starts at 1");
  if (kind_ == Kind::constant_weight) return 1.0;
  return std::pow(static_cast<double>(n), alpha_);
}

double StepSchedule::log_eta(std::uint64_t n) const {
  if (n == 0) throw std::invalid_argument("schedule: index starts at 1");
  if (kind_ == Kind::constant_weight) return 0.0;
  return alpha_ * std::log(static_cast<double>(n));
}

void StepSchedule::advance_to(std::uint64_t n) const {
  if (n < cur_n_) {  // backwards jump: restart the cursor
    cur_n_ = 1;
    cur_H_ = eta(1);
    cur_t_ = 1.0;  // gamma_1 = eta_1/H_1 = 1 always
  }
  while (cur_n_ < n) {
    ++cur_n_;
    const double e = eta(cur_n_);
    cur_H_ += e;
    cur_t_ += e / cur_H_;
  }
}

double StepSchedule::H(std::uint64_t n) const {
  if (n == 0) throw std::invalid_argument("schedule: index starts at 1");
  if (kind_ == Kind::constant_weight) return static_cast<double>(n);
  advance_to(n);
  return cur_H_;
}

double StepSchedule::gamma(std::uint64_t n) const {
  if (n == 0) throw std::invalid_argument("schedule: index starts at 1");
  if (kind_ == Kind::constant_weight) return 1.0 / static_cast<double>(n);
  advance_to(n);
  return eta(n) / cur_H_;
}

double StepSchedule::t(std::uint64_t n) const {
  if (n == 0) throw std::invalid_argument("schedule: index starts at 1");
  advance_to(n);
  return cur_t_;
}

namespace {
constexpr double kRescaleAt = 1e300;
constexpr int kRescaleShift = -1000;  // exact power-of-two weight shift
}  // namespace

WeightedEmpiricalMeasure::WeightedEmpiricalMeasure(int dim) : dim_(dim) {
  if (dim < 1) throw std::invalid_argument("measure: dimension must be >= 1");
  s1_.assign(dim, 0.0);
  s2_.assign(dim, 0.0);
}

void WeightedEmpiricalMeasure::reserve(std::size_t n) {
  pts_.reserve(n * dim_);
  weights_.reserve(n);
  std::size_t cap = 1;
  while (cap < n) cap <<= 1;
  if (cap > cap_) {
    cap_ = cap;
    rebuild_tree();
  }
}

void WeightedEmpiricalMeasure::tree_add(std::size_t i, double delta) {
  std::uint64_t touches = 0;
  for (std::size_t j = i + 1; j <= cap_; j += j & (~j + 1)) {
    tree_[j] += delta;
    ++touches;
  }
  last_op_touches_ = touches;
}

std::size_t WeightedEmpiricalMeasure::tree_find(double target) const {
  std::size_t pos = 0;
  std::uint64_t touches = 0;
  std::size_t bit = cap_;
  while (bit > 0) {
    const std::size_t next = pos + bit;
    if (next <= cap_) {
      ++touches;
      if (tree_[next] < target) {
        pos = next;
        target -= tree_[next];
      }
    }
    bit >>= 1;
  }
  last_op_touches_ = touches;
  return pos;  // prefix(pos) <= original target < prefix(pos+1)
}

void WeightedEmpiricalMeasure::rebuild_tree() {
  tree_.assign(cap_ + 1, 0.0);
  for (std::size_t i = 0; i < weights_.size(); ++i)
    for (std::size_t j = i + 1; j <= cap_; j += j & (~j + 1))
      tree_[j] += weights_[i];
}

void WeightedEmpiricalMeasure::maybe_rescale() {
  if (total_ < kRescaleAt) return;
  for (double& w : weights_) w = std::ldexp(w, kRescaleShift);
  for (int c = 0; c < dim_; ++c) {
    s1_[c] = std::ldexp(s1_[c], kRescaleShift);
    s2_[c] = std::ldexp(s2_[c], kRescaleShift);
  }
  total_ = std::ldexp(total_, kRescaleShift);
  scale_log2_ += kRescaleShift;
  ++rescale_epochs_;
  rebuild_tree();
}

void WeightedEmpiricalMeasure::add_sample(const double* x, double w) {
  if (!(w > 0.0) || !std::isfinite(w))
    throw std::invalid_argument("add_sample: weight must be positive finite");
  for (int d = 0; d < dim_; ++d)
    if (!std::isfinite(x[d]))
      throw std::invalid_argument("add_sample: non-finite coordinate");
  const double ws = scale_log2_ == 0 ? w : std::ldexp(w, scale_log2_);
  const std::size_t i = weights_.size();
  if (i + 1 > cap_) {
    cap_ = cap_ == 0 ? 1 : cap_ * 2;
    weights_.push_back(ws);
    pts_.insert(pts_.end(), x, x + dim_);
    rebuild_tree();
  } else {
    weights_.push_back(ws);
    pts_.insert(pts_.end(), x, x + dim_);
    tree_add(i, ws);
  }
  total_ += ws;
  for (int c = 0; c < dim_; ++c) {
    s1_[c] += ws * x[c];
    s2_[c] += ws * x[c] * x[c];
  }
  maybe_rescale();
}

void WeightedEmpiricalMeasure::add_sample1(double x, double w) {
  add_sample(&x, w);
}

std::size_t WeightedEmpiricalMeasure::sample_index(Rng& rng) const {
  if (empty()) throw state_error("sample: empty measure");
  const double target = rng.uniform() * total_;
  std::size_t k = tree_find(target);
  if (k >= size()) k = size() - 1;  // guard the total's rounding edge
  return k;
}

double WeightedEmpiricalMeasure::mean(int coord) const {
  if (empty()) throw state_error("mean: empty measure");
  return s1_[coord] / total_;
}

double WeightedEmpiricalMeasure::moment2(int coord) const {
  if (empty()) throw state_error("moment2: empty measure");
  return s2_[coord] / total_;
}

double WeightedEmpiricalMeasure::variance(int coord) const {
  const double m = mean(coord);
  const double v = moment2(coord) - m * m;
  return v > 0.0 ? v : 0.0;
}

double WeightedEmpiricalMeasure::integrate(
    const std::function<double(const double*)>& f) const {
  if (empty()) throw state_error("integrate: empty measure");
  double s = 0.0;
  for (std::size_t k = 0; k < size(); ++k) s += weights_[k] * f(point(k));
  return s / total_;
}

double WeightedEmpiricalMeasure::integrate1(
    const std::function<double(double)>& f) const {
  if (empty()) throw state_error("integrate: empty measure");
  double s = 0.0;
  for (std::size_t k = 0; k < size(); ++k) s += weights_[k] * f(pts_[k * dim_]);
  return s / total_;
}

double WeightedEmpiricalMeasure::abs_pow_moment(double p, int coord) const {
  if (empty()) throw state_error("abs_pow_moment: empty measure");
  if (dim_ == 1 && coord == 0)
    return kern::weighted_abs_pow_sum(weights_.data(), pts_.data(), size(), p) /
           total_;
  double s = 0.0;
  for (std::size_t k = 0; k < size(); ++k)
    s += weights_[k] * std::pow(std::fabs(pts_[k * dim_ + coord]), p);
  return s / total_;
}

double WeightedEmpiricalMeasure::prefix_naive(std::size_t k) const {
  double s = 0.0;
  for (std::size_t i = 0; i < k && i < size(); ++i) s += weights_[i];
  return s;
}

double WeightedEmpiricalMeasure::prefix_tree(std::size_t k) const {
  double s = 0.0;
  for (std::size_t j = std::min(k, size()); j > 0; j -= j & (~j + 1))
    s += tree_[j];
  return s;
}

}  // namespace qsd
