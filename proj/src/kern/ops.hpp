#pragma once

#include <cstddef>

// Private: per-ISA entry points wired into the dispatch table.
namespace qsd::kern::detail {

struct Ops {
  double (*reduce_add)(const double*, std::size_t);
  double (*dot)(const double*, const double*, std::size_t);
  double (*dot3)(const double*, const double*, const double*, std::size_t);
  double (*abs_diff_sum)(const double*, const double*, std::size_t);
  double (*max_abs_diff)(const double*, const double*, std::size_t);
  void (*axpby)(double, const double*, double, double*, std::size_t);
  void (*vexp)(const double*, double*, std::size_t);
  void (*kde_accumulate)(const double*, const double*, std::size_t, double,
                         const double*, std::size_t, double*);
};

const Ops& scalar_ops();
#if defined(QSD_HAVE_AVX2_TU)
const Ops& avx2_ops();
#endif

}  // namespace qsd::kern::detail
