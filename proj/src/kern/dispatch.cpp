#include "qsd/kern/kernels.hpp"

#include <cmath>
#include <cstdlib>
#include <cstring>

#include "ops.hpp"
#include "qsd/errors.hpp"

namespace qsd::kern {
namespace {

using detail::Ops;

bool g_forced = false;
Isa g_forced_isa = Isa::scalar;

Isa detect() {
  if (g_forced) return g_forced_isa;
  if (const char* env = std::getenv("QSD_KERNELS")) {
    if (std::strcmp(env, "scalar") == 0) return Isa::scalar;
    if (std::strcmp(env, "avx2") == 0 && cpu_supports_avx2()) return Isa::avx2;
  }
  return cpu_supports_avx2() ? Isa::avx2 : Isa::scalar;
}

const Ops& ops_for(Isa isa) {
#if defined(QSD_HAVE_AVX2_TU)
  if (isa == Isa::avx2) return detail::avx2_ops();
#endif
  (void)isa;
  return detail::scalar_ops();
}

const Ops& current() { return ops_for(detect()); }

}  // namespace

bool cpu_supports_avx2() {
#if defined(QSD_HAVE_AVX2_TU) && defined(__GNUC__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa active() { return detect(); }

void force(Isa isa) {
  if (isa == Isa::avx2 && !cpu_supports_avx2())
    throw model_error("kern::force: AVX2 not available on this host");
  g_forced = true;
  g_forced_isa = isa;
}

void clear_force() { g_forced = false; }

double reduce_add(const double* x, std::size_t n) {
  return current().reduce_add(x, n);
}
double dot(const double* x, const double* y, std::size_t n) {
  return current().dot(x, y, n);
}
double dot3(const double* w, const double* x, const double* y, std::size_t n) {
  return current().dot3(w, x, y, n);
}
double abs_diff_sum(const double* x, const double* y, std::size_t n) {
  return current().abs_diff_sum(x, y, n);
}
double max_abs_diff(const double* x, const double* y, std::size_t n) {
  return current().max_abs_diff(x, y, n);
}
void axpby(double a, const double* x, double b, double* y, std::size_t n) {
  current().axpby(a, x, b, y, n);
}
void vexp(const double* x, double* out, std::size_t n) {
  current().vexp(x, out, n);
}
void kde_accumulate(const double* centers, const double* w, std::size_t n,
                    double inv_bw, const double* grid, std::size_t g,
                    double* out) {
  current().kde_accumulate(centers, w, n, inv_bw, grid, g, out);
}

double weighted_abs_pow_sum(const double* w, const double* x, std::size_t n,
                            double p) {
  double acc = 0.0;
  if (p == 2.0) {
    // common case: reuse the vectorized triple product
    return dot3(w, x, x, n);
  }
  for (std::size_t i = 0; i < n; ++i) acc += w[i] * std::pow(std::fabs(x[i]), p);
  return acc;
}

}  // namespace qsd::kern
