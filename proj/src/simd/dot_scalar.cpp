#include "leakaudit/simd/kernels.hpp"

namespace leakaudit::simd {

double dot_scalar(const float* x, const float* y, std::size_t dim) {
  double lanes[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  const std::size_t body = dim & ~std::size_t{7};
  for (std::size_t i = 0; i < body; i += 8) {
    for (std::size_t j = 0; j < 8; ++j) {
      lanes[j] += static_cast<double>(x[i + j]) * static_cast<double>(y[i + j]);
    }
  }
  const double m0 = lanes[0] + lanes[4];
  const double m1 = lanes[1] + lanes[5];
  const double m2 = lanes[2] + lanes[6];
  const double m3 = lanes[3] + lanes[7];
  double sum = (m0 + m1) + (m2 + m3);
  for (std::size_t i = body; i < dim; ++i) {
    sum += static_cast<double>(x[i]) * static_cast<double>(y[i]);
  }
  return sum;
}

void dot_rows_scalar(const float* query, const float* rows, std::size_t n_rows, std::size_t dim, double* out) {
  for (std::size_t r = 0; r < n_rows; ++r) out[r] = dot_scalar(query, rows + r * dim, dim);
}

}  // namespace leakaudit::simd
