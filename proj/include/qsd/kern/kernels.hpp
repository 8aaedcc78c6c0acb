#pragma once

#include <cstddef>

// Data-parallel primitives behind the hot loops (density evaluation, moment
// and distance reductions). Every operation has a scalar reference
// implementation and, on x86-64, an AVX2+FMA variant; the active one is
// chosen once at runtime from CPUID. The two variants are equivalence-tested
// against each other, and everything falls back to scalar on other ISAs.
namespace qsd::kern {

enum class Isa { scalar, avx2 };

// ISA selected for subsequent calls. Resolution order: explicit force(),
// then the QSD_KERNELS environment variable ("scalar"/"avx2"), then CPUID.
Isa active();
bool cpu_supports_avx2();
// Test hook; throws qsd::model_error if the requested ISA is unavailable.
void force(Isa isa);
void clear_force();

// sum_i x[i]
double reduce_add(const double* x, std::size_t n);
// sum_i x[i]*y[i]
double dot(const double* x, const double* y, std::size_t n);
// sum_i w[i]*x[i]*y[i]
double dot3(const double* w, const double* x, const double* y, std::size_t n);
// sum_i |x[i]-y[i]|
double abs_diff_sum(const double* x, const double* y, std::size_t n);
// max_i |x[i]-y[i]|
double max_abs_diff(const double* x, const double* y, std::size_t n);
// y[i] = a*x[i] + b*y[i]
void axpby(double a, const double* x, double b, double* y, std::size_t n);
// out[i] = exp(x[i]); correctly saturates to 0 / +inf outside double range
void vexp(const double* x, double* out, std::size_t n);
// Weighted Gaussian mixture evaluated on a grid:
//   out[g] += sum_k w[k] * exp(-((grid[g]-c[k])*inv_bw)^2 / 2)
// Caller applies the 1/(bw*sqrt(2*pi)*W) prefactor.
void kde_accumulate(const double* centers, const double* w, std::size_t n,
                    double inv_bw, const double* grid, std::size_t g,
                    double* out);

// sum_i w[i]*|x[i]|^p. Scalar on all ISAs: p is a run parameter, pow() does
// not vectorize profitably, and this sits outside the per-step hot path.
double weighted_abs_pow_sum(const double* w, const double* x, std::size_t n,
                            double p);

}  // namespace qsd::kern
