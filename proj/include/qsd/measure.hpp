#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "qsd/rng.hpp"

namespace qsd {

// Probability vector on a finite state space {0..m-1}.
// Total-variation convention throughout: ||p - q|| = sum_i |p_i - q_i|
// (so two disjoint point masses are at distance 2).
struct DiscreteMeasure {
  std::vector<double> p;

  DiscreteMeasure() = default;
  explicit DiscreteMeasure(std::vector<double> probs);

  int size() const { return static_cast<int>(p.size()); }
  static DiscreteMeasure uniform(int m);
  static DiscreteMeasure delta(int m, int i);
  // Normalizes nonnegative weights; rejects negatives and zero total.
  static DiscreteMeasure from_weights(const std::vector<double>& w);

  // Enforces the simplex invariants (entries >= -tol, sum within tol of 1).
  void validate(double tol = 1e-12) const;
  double tv(const DiscreteMeasure& q) const;
  double mean_position() const;  // states embedded at 0,1,...,m-1
};

// Step weights eta_n (n >= 1) and the derived quantities H_n = sum eta_k,
// gamma_n = eta_n / H_n, t_n = sum_{k<=n} gamma_k. Two families:
//   polynomial(alpha): eta_n = n^alpha, alpha > -1  (alpha = 0 gives 1/n steps)
//   constant_weight(): eta_n = 1
// gamma_n is nonincreasing and gamma_n -> 0 slower than 1/log n stays o(1),
// the regime the averaging scheme needs. Sequential access is O(1) amortized
// via an internal cursor; jumping backwards recomputes from the start.
// Not safe for concurrent calls on one instance; copy per thread.
class StepSchedule {
 public:
  enum class Kind { polynomial, constant_weight };

  static StepSchedule polynomial(double alpha);
  static StepSchedule constant_weight();

  Kind kind() const { return kind_; }
  double alpha() const { return alpha_; }
  double eta(std::uint64_t n) const;
  double log_eta(std::uint64_t n) const;
  double H(std::uint64_t n) const;
  double gamma(std::uint64_t n) const;
  double t(std::uint64_t n) const;

 private:
  StepSchedule(Kind k, double a) : kind_(k), alpha_(a) {}
  void advance_to(std::uint64_t n) const;

  Kind kind_;
  double alpha_;
  mutable std::uint64_t cur_n_ = 1;
  mutable double cur_H_ = 1.0;
  mutable double cur_t_ = 1.0;
};

// Weighted particle list with O(log n) categorical sampling through a
// binary-indexed (Fenwick) prefix tree, plus running first and second
// moments per coordinate. Appending the point x with weight w realizes
//   mu <- (1 - g) mu + g delta_x,   g = w / (H + w),
// which is the occupation-measure recursion; the k-th appended point is the
// chain state X_{k-1}, so the map from chain time to atom index is shifted
// by one relative to the plain running average (asymptotically immaterial,
// and the recursion form is what the algorithm specifies).
//
// Weight scale: when the running total exceeds ~1e300 all stored weights are
// rescaled by an exact power of two and incoming weights are shifted to
// match, so ratios (hence probabilities) are preserved bit-for-bit and
// arbitrarily long weight schedules cannot overflow the total.
class WeightedEmpiricalMeasure {
 public:
  explicit WeightedEmpiricalMeasure(int dim = 1);

  int dim() const { return dim_; }
  std::size_t size() const { return weights_.size(); }
  bool empty() const { return weights_.empty(); }
  void reserve(std::size_t n);

  // Appends a particle; w must be > 0 (true scale, before internal shifts).
  void add_sample(const double* x, double w);
  void add_sample1(double x, double w);

  // Index of a particle drawn proportionally to weight. O(log n).
  std::size_t sample_index(Rng& rng) const;

  const double* point(std::size_t k) const { return &pts_[k * dim_]; }
  double point1(std::size_t k) const { return pts_[k * dim_]; }
  double weight(std::size_t k) const { return weights_[k]; }  // internal scale
  double total() const { return total_; }                     // internal scale
  double prob(std::size_t k) const { return weights_[k] / total_; }
  int scale_log2() const { return scale_log2_; }

  double mean(int coord = 0) const;
  double moment2(int coord = 0) const;  // E[x_c^2]
  double variance(int coord = 0) const;

  // sum_k w_k f(x_k) / H
  double integrate(const std::function<double(const double*)>& f) const;
  double integrate1(const std::function<double(double)>& f) const;
  // sum_k w_k |x_k(coord)|^p / H
  double abs_pow_moment(double p, int coord = 0) const;

  // Naive O(n) prefix sum over weights [0, k); test oracle for the tree.
  double prefix_naive(std::size_t k) const;
  double prefix_tree(std::size_t k) const;

  // Raw coordinate array (contiguous when dim == 1) for bulk evaluation.
  const std::vector<double>& flat_points() const { return pts_; }
  const std::vector<double>& raw_weights() const { return weights_; }

  // Fenwick nodes touched by the most recent add/sample (complexity probe);
  // capacity-growth rebuilds are excluded.
  std::uint64_t last_op_touches() const { return last_op_touches_; }
  int rescale_epochs() const { return rescale_epochs_; }

 private:
  void tree_add(std::size_t i, double delta);
  std::size_t tree_find(double target) const;
  void rebuild_tree();
  void maybe_rescale();

  int dim_;
  std::vector<double> pts_;
  std::vector<double> weights_;
  std::vector<double> tree_;  // 1-based, capacity cap_
  std::size_t cap_ = 0;
  double total_ = 0.0;
  std::vector<double> s1_, s2_;
  int scale_log2_ = 0;
  int rescale_epochs_ = 0;
  mutable std::uint64_t last_op_touches_ = 0;
};

}  // namespace qsd
