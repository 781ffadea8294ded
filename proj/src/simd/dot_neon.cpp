#include <arm_neon.h>

#include "leakaudit/simd/kernels.hpp"

namespace leakaudit::simd {

namespace {

inline double fold(float64x2_t a01, float64x2_t a23, float64x2_t a45, float64x2_t a67) {
  const float64x2_t m01 = vaddq_f64(a01, a45);  // l0+l4, l1+l5
  const float64x2_t m23 = vaddq_f64(a23, a67);  // l2+l6, l3+l7
  return vaddvq_f64(m01) + vaddvq_f64(m23);
}

}  // namespace

double dot_neon(const float* x, const float* y, std::size_t dim) {
  float64x2_t a01 = vdupq_n_f64(0.0), a23 = vdupq_n_f64(0.0);
  float64x2_t a45 = vdupq_n_f64(0.0), a67 = vdupq_n_f64(0.0);
  const std::size_t body = dim & ~std::size_t{7};
  for (std::size_t i = 0; i < body; i += 8) {
    const float32x4_t x0 = vld1q_f32(x + i), x1 = vld1q_f32(x + i + 4);
    const float32x4_t y0 = vld1q_f32(y + i), y1 = vld1q_f32(y + i + 4);
    a01 = vaddq_f64(a01, vmulq_f64(vcvt_f64_f32(vget_low_f32(x0)), vcvt_f64_f32(vget_low_f32(y0))));
    a23 = vaddq_f64(a23, vmulq_f64(vcvt_high_f64_f32(x0), vcvt_high_f64_f32(y0)));
    a45 = vaddq_f64(a45, vmulq_f64(vcvt_f64_f32(vget_low_f32(x1)), vcvt_f64_f32(vget_low_f32(y1))));
    a67 = vaddq_f64(a67, vmulq_f64(vcvt_high_f64_f32(x1), vcvt_high_f64_f32(y1)));
  }
  double sum = fold(a01, a23, a45, a67);
  for (std::size_t i = body; i < dim; ++i) sum += static_cast<double>(x[i]) * static_cast<double>(y[i]);
  return sum;
}

void dot_rows_neon(const float* query, const float* rows, std::size_t n_rows, std::size_t dim, double* out) {
  for (std::size_t r = 0; r < n_rows; ++r) out[r] = dot_neon(query, rows + r * dim, dim);
}

}  // namespace leakaudit::simd
