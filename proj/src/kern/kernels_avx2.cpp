#if defined(QSD_HAVE_AVX2_TU)

#include <immintrin.h>

#include <cmath>
#include <cstddef>

#include "ops.hpp"

// AVX2+FMA kernels. This translation unit is compiled with -mavx2 -mfma and
// only ever entered after a runtime CPUID check, so no other file may inline
// from it. Loops follow loadu/storeu + fmadd with scalar tail processing.
namespace qsd::kern::detail {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  const __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

inline __m256d abs_pd(__m256d v) {
  return _mm256_andnot_pd(_mm256_set1_pd(-0.0), v);
}

// exp() on 4 lanes: argument reduction x = n*ln2 + r, |r| <= ln2/2, then the
// classic rational approximation exp(r) = 1 + 2p/(q-p) with p = r*P(r^2),
// q = Q(r^2), and reconstruction by two half-sized power-of-two scalings so
// the exponent field never overflows near the double range edges.
inline __m256d exp_pd(__m256d x) {
  const __m256d hi_edge = _mm256_set1_pd(709.782712893383996732);
  const __m256d lo_edge = _mm256_set1_pd(-708.396418532264106224);
  __m256d xc = _mm256_min_pd(_mm256_max_pd(x, lo_edge), hi_edge);

  const __m256d log2e = _mm256_set1_pd(1.44269504088896340736);
  __m256d n = _mm256_round_pd(_mm256_mul_pd(xc, log2e),
                              _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  // r = xc - n*ln2, ln2 split into exact high part + correction
  __m256d r = _mm256_fnmadd_pd(_mm256_set1_pd(6.93145751953125e-1), n, xc);
  r = _mm256_fnmadd_pd(_mm256_set1_pd(1.42860682030941723212e-6), n, r);
  const __m256d rr = _mm256_mul_pd(r, r);

  __m256d p = _mm256_set1_pd(1.26177193074810590878e-4);
  p = _mm256_fmadd_pd(p, rr, _mm256_set1_pd(3.02994407707441961300e-2));
  p = _mm256_fmadd_pd(p, rr, _mm256_set1_pd(9.99999999999999999910e-1));
  p = _mm256_mul_pd(p, r);
  __m256d q = _mm256_set1_pd(3.00198505138664455042e-6);
  q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(2.52448340349684104192e-3));
  q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(2.27265548208155028766e-1));
  q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(2.00000000000000000005e0));
  __m256d e = _mm256_div_pd(p, _mm256_sub_pd(q, p));
  e = _mm256_fmadd_pd(_mm256_set1_pd(2.0), e, _mm256_set1_pd(1.0));

  // 2^n = 2^n1 * 2^n2 with n1 = round(n/2); both halves stay in [-512,512]
  const __m256d n1 = _mm256_round_pd(
      _mm256_mul_pd(n, _mm256_set1_pd(0.5)),
      _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  const __m256d n2 = _mm256_sub_pd(n, n1);
  const __m256i bias = _mm256_set1_epi64x(1023);
  const __m256i s1 = _mm256_slli_epi64(
      _mm256_add_epi64(_mm256_cvtepi32_epi64(_mm256_cvtpd_epi32(n1)), bias), 52);
  const __m256i s2 = _mm256_slli_epi64(
      _mm256_add_epi64(_mm256_cvtepi32_epi64(_mm256_cvtpd_epi32(n2)), bias), 52);
  e = _mm256_mul_pd(_mm256_mul_pd(e, _mm256_castsi256_pd(s1)),
                    _mm256_castsi256_pd(s2));

  // saturate outside the clamp range (the sub-normal strip is flushed to 0)
  e = _mm256_blendv_pd(e, _mm256_setzero_pd(),
                       _mm256_cmp_pd(x, lo_edge, _CMP_LT_OQ));
  e = _mm256_blendv_pd(
      e, _mm256_set1_pd(HUGE_VAL), _mm256_cmp_pd(x, hi_edge, _CMP_GT_OQ));
  return e;
}

double v_reduce_add(const double* x, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
  double s = hsum(acc);
  for (; i < n; ++i) s += x[i];  // Scalar tail processing
  return s;
}

double v_dot(const double* x, const double* y, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc);
  double s = hsum(acc);
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

double v_dot3(const double* w, const double* x, const double* y,
              std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d xy =
        _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(w + i), xy, acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += w[i] * x[i] * y[i];
  return s;
}

double v_abs_diff_sum(const double* x, const double* y, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d =
        _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
    acc = _mm256_add_pd(acc, abs_pd(d));
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += std::fabs(x[i] - y[i]);
  return s;
}

double v_max_abs_diff(const double* x, const double* y, std::size_t n) {
  __m256d mx = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d =
        _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
    mx = _mm256_max_pd(mx, abs_pd(d));
  }
  __m128d lo = _mm256_castpd256_pd128(mx);
  const __m128d hi = _mm256_extractf128_pd(mx, 1);
  lo = _mm_max_pd(lo, hi);
  double m = _mm_cvtsd_f64(_mm_max_sd(lo, _mm_unpackhi_pd(lo, lo)));
  for (; i < n; ++i) {
    const double d = std::fabs(x[i] - y[i]);
    if (d > m) m = d;
  }
  return m;
}

void v_axpby(double a, const double* x, double b, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  const __m256d vb = _mm256_set1_pd(b);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d t = _mm256_mul_pd(vb, _mm256_loadu_pd(y + i));
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), t));
  }
  for (; i < n; ++i) y[i] = a * x[i] + b * y[i];
}

void v_vexp(const double* x, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, exp_pd(_mm256_loadu_pd(x + i)));
  for (; i < n; ++i) out[i] = std::exp(x[i]);
}

void v_kde_accumulate(const double* centers, const double* w, std::size_t n,
                      double inv_bw, const double* grid, std::size_t g,
                      double* out) {
  const __m256d vinv = _mm256_set1_pd(inv_bw);
  const __m256d half = _mm256_set1_pd(-0.5);
  for (std::size_t j = 0; j < g; ++j) {
    const __m256d gj = _mm256_set1_pd(grid[j]);
    __m256d acc = _mm256_setzero_pd();
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
      const __m256d z = _mm256_mul_pd(
          _mm256_sub_pd(gj, _mm256_loadu_pd(centers + k)), vinv);
      const __m256d t = _mm256_mul_pd(half, _mm256_mul_pd(z, z));
      acc = _mm256_fmadd_pd(_mm256_loadu_pd(w + k), exp_pd(t), acc);
    }
    double s = hsum(acc);
    for (; k < n; ++k) {  // Scalar tail processing
      const double z = (grid[j] - centers[k]) * inv_bw;
      s += w[k] * std::exp(-0.5 * z * z);
    }
    out[j] += s;
  }
}

}  // namespace

const Ops& avx2_ops() {
  static const Ops ops = {v_reduce_add, v_dot,   v_dot3, v_abs_diff_sum,
                          v_max_abs_diff, v_axpby, v_vexp, v_kde_accumulate};
  return ops;
}

}  // namespace qsd::kern::detail

#endif  // QSD_HAVE_AVX2_TU
