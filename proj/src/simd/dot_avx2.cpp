#include <immintrin.h>

#include "leakaudit/simd/kernels.hpp"

namespace leakaudit::simd {

namespace {

// Lanes 0-3 and 4-7 of one 8-float step, widened to double.
inline void widen(const float* p, __m256d& lo, __m256d& hi) {
  const __m256 v = _mm256_loadu_ps(p);
  lo = _mm256_cvtps_pd(_mm256_castps256_ps128(v));
  hi = _mm256_cvtps_pd(_mm256_extractf128_ps(v, 1));
}

inline double fold(__m256d acc_lo, __m256d acc_hi) {
  const __m256d m = _mm256_add_pd(acc_lo, acc_hi);       // m_j = l_j + l_{j+4}
  const __m256d h = _mm256_hadd_pd(m, m);                // m0+m1, ., m2+m3, .
  const __m128d a = _mm256_castpd256_pd128(h);
  const __m128d b = _mm256_extractf128_pd(h, 1);
  return _mm_cvtsd_f64(_mm_add_sd(a, b));
}

inline double tail(double sum, const float* x, const float* y, std::size_t from, std::size_t dim) {
  for (std::size_t i = from; i < dim; ++i) sum += static_cast<double>(x[i]) * static_cast<double>(y[i]);
  return sum;
}

}  // namespace

double dot_avx2(const float* x, const float* y, std::size_t dim) {
  __m256d acc_lo = _mm256_setzero_pd();
  __m256d acc_hi = _mm256_setzero_pd();
  const std::size_t body = dim & ~std::size_t{7};
  for (std::size_t i = 0; i < body; i += 8) {
    __m256d xl, xh, yl, yh;
    widen(x + i, xl, xh);
    widen(y + i, yl, yh);
    acc_lo = _mm256_add_pd(acc_lo, _mm256_mul_pd(xl, yl));
    acc_hi = _mm256_add_pd(acc_hi, _mm256_mul_pd(xh, yh));
  }
  return tail(fold(acc_lo, acc_hi), x, y, body, dim);
}

void dot_rows_avx2(const float* query, const float* rows, std::size_t n_rows, std::size_t dim, double* out) {
  const std::size_t body = dim & ~std::size_t{7};
  std::size_t r = 0;
  // Four rows per pass share the widened query.
  for (; r + 4 <= n_rows; r += 4) {
    const float* r0 = rows + (r + 0) * dim;
    const float* r1 = rows + (r + 1) * dim;
    const float* r2 = rows + (r + 2) * dim;
    const float* r3 = rows + (r + 3) * dim;
    __m256d a0l = _mm256_setzero_pd(), a0h = _mm256_setzero_pd();
    __m256d a1l = _mm256_setzero_pd(), a1h = _mm256_setzero_pd();
    __m256d a2l = _mm256_setzero_pd(), a2h = _mm256_setzero_pd();
    __m256d a3l = _mm256_setzero_pd(), a3h = _mm256_setzero_pd();
    for (std::size_t i = 0; i < body; i += 8) {
      __m256d ql, qh, vl, vh;
      widen(query + i, ql, qh);
      widen(r0 + i, vl, vh);
      a0l = _mm256_add_pd(a0l, _mm256_mul_pd(ql, vl));
      a0h = _mm256_add_pd(a0h, _mm256_mul_pd(qh, vh));
      widen(r1 + i, vl, vh);
      a1l = _mm256_add_pd(a1l, _mm256_mul_pd(ql, vl));
      a1h = _mm256_add_pd(a1h, _mm256_mul_pd(qh, vh));
      widen(r2 + i, vl, vh);
      a2l = _mm256_add_pd(a2l, _mm256_mul_pd(ql, vl));
      a2h = _mm256_add_pd(a2h, _mm256_mul_pd(qh, vh));
      widen(r3 + i, vl, vh);
      a3l = _mm256_add_pd(a3l, _mm256_mul_pd(ql, vl));
      a3h = _mm256_add_pd(a3h, _mm256_mul_pd(qh, vh));
    }
    out[r + 0] = tail(fold(a0l, a0h), query, r0, body, dim);
    out[r + 1] = tail(fold(a1l, a1h), query, r1, body, dim);
    out[r + 2] = tail(fold(a2l, a2h), query, r2, body, dim);
    out[r + 3] = tail(fold(a3l, a3h), query, r3, body, dim);
  }
  for (; r < n_rows; ++r) out[r] = dot_avx2(query, rows + r * dim, dim);
}

}  // namespace leakaudit::simd
