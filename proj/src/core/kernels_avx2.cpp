// Compiled with -mavx2 -mfma; only reached through the runtime dispatcher.

#include <immintrin.h>

#include <cmath>

#include "plk/kernels.hpp"

namespace plk::kernels::avx2 {

namespace {

inline __m256d abs_pd(__m256d v) {
  const __m256d sign = _mm256_set1_pd(-0.0);
  return _mm256_andnot_pd(sign, v);
}

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

inline double hmax(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_max_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_max_sd(lo, sh));
}

double sum_abs(const double* p, std::size_t n) {
  __m256d a0 = _mm256_setzero_pd();
  __m256d a1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    a0 = _mm256_add_pd(a0, abs_pd(_mm256_loadu_pd(p + i)));
    a1 = _mm256_add_pd(a1, abs_pd(_mm256_loadu_pd(p + i + 4)));
  }
  for (; i + 4 <= n; i += 4) a0 = _mm256_add_pd(a0, abs_pd(_mm256_loadu_pd(p + i)));
  double acc = hsum(_mm256_add_pd(a0, a1));
  for (; i < n; ++i) acc += std::abs(p[i]);
  return acc;
}

}  // namespace

double abs_trapezoid(std::span<const double> y, double dt) {
  if (y.size() < 2) return 0.0;
  const double interior = sum_abs(y.data() + 1, y.size() - 2);
  return dt * (interior + 0.5 * (std::abs(y.front()) + std::abs(y.back())));
}

double sum_squares(std::span<const double> y) {
  const double* p = y.data();
  const std::size_t n = y.size();
  __m256d a0 = _mm256_setzero_pd();
  __m256d a1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256d v0 = _mm256_loadu_pd(p + i);
    const __m256d v1 = _mm256_loadu_pd(p + i + 4);
    a0 = _mm256_fmadd_pd(v0, v0, a0);
    a1 = _mm256_fmadd_pd(v1, v1, a1);
  }
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_loadu_pd(p + i);
    a0 = _mm256_fmadd_pd(v, v, a0);
  }
  double acc = hsum(_mm256_add_pd(a0, a1));
  for (; i < n; ++i) acc += p[i] * p[i];
  return acc;
}

double max_abs(std::span<const double> y) {
  const double* p = y.data();
  const std::size_t n = y.size();
  __m256d m = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) m = _mm256_max_pd(m, abs_pd(_mm256_loadu_pd(p + i)));
  double out = hmax(m);
  for (; i < n; ++i) out = std::max(out, std::abs(p[i]));
  return out;
}

}  // namespace plk::kernels::avx2
