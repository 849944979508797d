#include "codesign/kernels.hpp"

#include <cmath>

namespace codesign::kern::detail {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void matvec_scalar(const double* a, const double* x, double* y,
                   std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r)
    y[r] = dot_scalar(a + r * cols, x, cols);
}

void sqdist_rows_scalar(const double* xs, std::size_t n, std::size_t d,
                        const double* q, double* out) {
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = xs + i * d;
    double acc = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      double diff = row[j] - q[j];
      acc += diff * diff;
    }
    out[i] = acc;
  }
}

void vexp_scalar(const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = std::exp(x[i]);
}

}  // namespace codesign::kern::detail
