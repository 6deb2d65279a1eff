#include "qdent/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#define QDENT_X86 1
#include <immintrin.h>
#else
#define QDENT_X86 0
#endif

namespace qdent::kernels::avx2 {

#if QDENT_X86

bool compiled() noexcept { return true; }

__attribute__((target("avx2,fma"))) void cascade_integrand(const ResonancePair& res,
                                                            std::span<const double> nodes,
                                                            const IntegrandLanes& out) {
  const std::size_t n = nodes.size();
  const __m256d eh = _mm256_set1_pd(res.center_h);
  const __m256d ev = _mm256_set1_pd(res.center_v);
  const __m256d gh = _mm256_set1_pd(res.half_width_h);
  const __m256d gv = _mm256_set1_pd(res.half_width_v);
  const __m256d gh2 = _mm256_mul_pd(gh, gh);
  const __m256d gv2 = _mm256_mul_pd(gv, gv);
  const __m256d ghgv = _mm256_mul_pd(gh, gv);
  const __m256d one = _mm256_set1_pd(1.0);

  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d k = _mm256_loadu_pd(nodes.data() + i);
    const __m256d a = _mm256_sub_pd(k, eh);
    const __m256d b = _mm256_sub_pd(k, ev);
    const __m256d lh = _mm256_div_pd(one, _mm256_fmadd_pd(a, a, gh2));
    const __m256d lv = _mm256_div_pd(one, _mm256_fmadd_pd(b, b, gv2));
    const __m256d scale = _mm256_mul_pd(lh, lv);
    const __m256d re = _mm256_mul_pd(_mm256_fmadd_pd(a, b, ghgv), scale);
    const __m256d im = _mm256_mul_pd(_mm256_fmsub_pd(a, gv, _mm256_mul_pd(gh, b)), scale);
    _mm256_storeu_pd(out.cross_re.data() + i, re);
    _mm256_storeu_pd(out.cross_im.data() + i, im);
    _mm256_storeu_pd(out.lorentz_h.data() + i, lh);
    _mm256_storeu_pd(out.lorentz_v.data() + i, lv);
  }
  if (i < n) {
    const IntegrandLanes tail{out.cross_re.subspan(i), out.cross_im.subspan(i), out.lorentz_h.subspan(i),
                              out.lorentz_v.subspan(i)};
    scalar::cascade_integrand(res, nodes.subspan(i), tail);
  }
}

__attribute__((target("avx2,popcnt"))) std::size_t count_in_window(std::span<const double> values, double lo,
                                                                   double hi) {
  const std::size_t n = values.size();
  const __m256d vlo = _mm256_set1_pd(lo);
  const __m256d vhi = _mm256_set1_pd(hi);
  std::size_t count = 0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d x = _mm256_loadu_pd(values.data() + i);
    const __m256d inside = _mm256_and_pd(_mm256_cmp_pd(x, vlo, _CMP_GE_OQ), _mm256_cmp_pd(x, vhi, _CMP_LE_OQ));
    count += static_cast<std::size_t>(__builtin_popcount(static_cast<unsigned>(_mm256_movemask_pd(inside))));
  }
  return count + scalar::count_in_window(values.subspan(i), lo, hi);
}

#else

bool compiled() noexcept { return false; }

void cascade_integrand(const ResonancePair& res, std::span<const double> nodes, const IntegrandLanes& out) {
  scalar::cascade_integrand(res, nodes, out);
}

std::size_t count_in_window(std::span<const double> values, double lo, double hi) {
  return scalar::count_in_window(values, lo, hi);
}

#endif

}  // namespace qdent::kernels::avx2
