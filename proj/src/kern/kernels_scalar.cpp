#include <cmath>
#include <cstddef>

#include "ops.hpp"

// Scalar reference kernels. Plain loops, kept branch-free where it matters;
// the AVX2 variants must agree with these to tight tolerances.
namespace qsd::kern::detail {
namespace {

double s_reduce_add(const double* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i];
  return acc;
}

double s_dot(const double* x, const double* y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

double s_dot3(const double* w, const double* x, const double* y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += w[i] * x[i] * y[i];
  return acc;
}

double s_abs_diff_sum(const double* x, const double* y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += std::fabs(x[i] - y[i]);
  return acc;
}

double s_max_abs_diff(const double* x, const double* y, std::size_t n) {
  double m = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = std::fabs(x[i] - y[i]);
    if (d > m) m = d;
  }
  return m;
}

void s_axpby(double a, const double* x, double b, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = a * x[i] + b * y[i];
}

void s_vexp(const double* x, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = std::exp(x[i]);
}

void s_kde_accumulate(const double* centers, const double* w, std::size_t n,
                      double inv_bw, const double* grid, std::size_t g,
                      double* out) {
  for (std::size_t j = 0; j < g; ++j) {
    const double gj = grid[j];
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double z = (gj - centers[k]) * inv_bw;
      acc += w[k] * std::exp(-0.5 * z * z);
    }
    out[j] += acc;
  }
}

}  // namespace

const Ops& scalar_ops() {
  static const Ops ops = {s_reduce_add, s_dot,   s_dot3, s_abs_diff_sum,
                          s_max_abs_diff, s_axpby, s_vexp, s_kde_accumulate};
  return ops;
}

}  // namespace qsd::kern::detail
